// Copyright 2026 The PreferGrow Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Built with PREFERGROW_FAULT_CHAPMAN defined: a sign flip in the forward
// transition must make the composition suite fail, proving the verification
// machinery is sensitive to the algebra it claims to check.

#include <cstdio>

#include "prefergrow/verify.hpp"

#ifndef PREFERGROW_FAULT_CHAPMAN
#error "this check only makes sense with the fault injected"
#endif

int main() {
  const auto result = prefergrow::verify::suite_chapman_kolmogorov(100);
  if (result.pass) {
    std::printf("FAIL: the injected sign flip went undetected\n");
    return 1;
  }
  std::printf(
      "OK: chapman-kolmogorov rejects the injected sign flip (max_err=%.3e)\n",
      result.max_error);
  return 0;
}
