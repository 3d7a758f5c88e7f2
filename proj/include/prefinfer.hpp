// Copyright 2026 The prefinfer Authors.
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

#ifndef PREFINFER_PREFINFER_HPP_
#define PREFINFER_PREFINFER_HPP_

#include "prefinfer/belief.hpp"
#include "prefinfer/error.hpp"
#include "prefinfer/harness.hpp"
#include "prefinfer/llm.hpp"
#include "prefinfer/objectives.hpp"
#include "prefinfer/oracle.hpp"
#include "prefinfer/prompts.hpp"
#include "prefinfer/service.hpp"
#include "prefinfer/session.hpp"
#include "prefinfer/tasks.hpp"
#include "prefinfer/text.hpp"
#include "prefinfer/user_sim.hpp"

#endif  // PREFINFER_PREFINFER_HPP_
