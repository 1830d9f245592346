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

#pragma once

#include <stdexcept>
#include <string>

namespace prefergrow {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define PREFERGROW_DEFINE_ERROR(Name)                               \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

PREFERGROW_DEFINE_ERROR(InvalidTarget);
PREFERGROW_DEFINE_ERROR(OverlappingSupports);
PREFERGROW_DEFINE_ERROR(SupportMismatch);
PREFERGROW_DEFINE_ERROR(DimensionError);
PREFERGROW_DEFINE_ERROR(DomainError);
PREFERGROW_DEFINE_ERROR(OrderingError);
PREFERGROW_DEFINE_ERROR(UnreachableState);
PREFERGROW_DEFINE_ERROR(DegenerateReverse);
PREFERGROW_DEFINE_ERROR(MagnitudeError);
PREFERGROW_DEFINE_ERROR(ConfigError);
PREFERGROW_DEFINE_ERROR(ParseError);
PREFERGROW_DEFINE_ERROR(RangeError);
PREFERGROW_DEFINE_ERROR(DataError);
PREFERGROW_DEFINE_ERROR(NumericalError);
PREFERGROW_DEFINE_ERROR(EmptyHistory);

#undef PREFERGROW_DEFINE_ERROR

}  // namespace prefergrow
