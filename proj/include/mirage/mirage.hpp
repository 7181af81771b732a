/*
 * Copyright 2026 The Mirage Authors.
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

#ifndef MIRAGE_MIRAGE_HPP_
#define MIRAGE_MIRAGE_HPP_

#include "mirage/common.hpp"
#include "mirage/deception.hpp"
#include "mirage/default_schema.hpp"
#include "mirage/detectors/gradient_boosted.hpp"
#include "mirage/detectors/isolation_forest.hpp"
#include "mirage/detectors/mlp.hpp"
#include "mirage/detectors/model_container.hpp"
#include "mirage/detectors/random_forest.hpp"
#include "mirage/ensemble.hpp"
#include "mirage/evaluation.hpp"
#include "mirage/flow_ingest.hpp"
#include "mirage/orchestrator.hpp"
#include "mirage/pipeline.hpp"
#include "mirage/profiler.hpp"
#include "mirage/resampling.hpp"
#include "mirage/signal_bus.hpp"
#include "mirage/synthetic.hpp"

#endif  // MIRAGE_MIRAGE_HPP_
