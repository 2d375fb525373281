/*
 * Copyright 2026 The rankaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RANKAUDIT_RANKAUDIT_HPP_
#define RANKAUDIT_RANKAUDIT_HPP_

#include "rankaudit/inference.hpp"
#include "rankaudit/io.hpp"
#include "rankaudit/model.hpp"
#include "rankaudit/moments.hpp"
#include "rankaudit/random.hpp"
#include "rankaudit/rationalize.hpp"
#include "rankaudit/report.hpp"
#include "rankaudit/simulate.hpp"

#endif  // RANKAUDIT_RANKAUDIT_HPP_
