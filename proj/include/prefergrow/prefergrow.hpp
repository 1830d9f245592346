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

#include "prefergrow/autodiff.hpp"
#include "prefergrow/config.hpp"
#include "prefergrow/errors.hpp"
#include "prefergrow/evaldata.hpp"
#include "prefergrow/fading.hpp"
#include "prefergrow/losses.hpp"
#include "prefergrow/process.hpp"
#include "prefergrow/rng.hpp"
#include "prefergrow/sampler.hpp"
#include "prefergrow/schedule.hpp"
#include "prefergrow/scorenet.hpp"
#include "prefergrow/train.hpp"
#include "prefergrow/verify.hpp"
