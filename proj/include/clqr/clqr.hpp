/*
 * Copyright 2026 The clqr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CLQR_CLQR_HPP_
#define CLQR_CLQR_HPP_

#include "clqr/common.hpp"
#include "clqr/config.hpp"
#include "clqr/experiment.hpp"
#include "clqr/fama.hpp"
#include "clqr/horizon.hpp"
#include "clqr/io.hpp"
#include "clqr/lp.hpp"
#include "clqr/model.hpp"
#include "clqr/oracle.hpp"
#include "clqr/polytope.hpp"
#include "clqr/riccati.hpp"
#include "clqr/stage.hpp"

#endif  // CLQR_CLQR_HPP_
