/**
 * Copyright 2026 The paada Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "paada/augment.hpp"
#include "paada/checkpoint.hpp"
#include "paada/config.hpp"
#include "paada/env.hpp"
#include "paada/error.hpp"
#include "paada/harness.hpp"
#include "paada/mlp.hpp"
#include "paada/objectives.hpp"
#include "paada/parallel.hpp"
#include "paada/ppo.hpp"
#include "paada/random.hpp"
#include "paada/rollout.hpp"
#include "paada/transition.hpp"
