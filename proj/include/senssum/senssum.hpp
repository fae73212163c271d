// Copyright 2026 The senssum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "senssum/bootstrap.hpp"
#include "senssum/bpe.hpp"
#include "senssum/conformance.hpp"
#include "senssum/error.hpp"
#include "senssum/experiment.hpp"
#include "senssum/judge.hpp"
#include "senssum/kd.hpp"
#include "senssum/manifest.hpp"
#include "senssum/metrics.hpp"
#include "senssum/prng.hpp"
#include "senssum/protocol.hpp"
#include "senssum/report.hpp"
#include "senssum/tokens.hpp"
#include "senssum/toy.hpp"
#include "senssum/unicode.hpp"
