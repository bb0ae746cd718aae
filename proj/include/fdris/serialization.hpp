// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The fdris authors
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
// ------------------------------------------------------------------------

#pragma once

#include "fdris/harness.hpp"

#include <json.hpp>

namespace fdris {

using Json = nlohmann::json;

// Matrices are {"rows", "cols", "data"} with data a row-major list of
// [re, im] pairs.
Json matrix_to_json(const CMat& m);
CMat matrix_from_json(const Json& j);

Json to_json(const ChannelSet& cs);
ChannelSet channel_set_from_json(const Json& j);

Json to_json(const EstimationReport& report);

Json to_json(const ResultTable& table);
ResultTable results_from_json(const Json& j);

Json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys raise ConfigError.
ExperimentConfig experiment_from_json(const Json& j);

}  // namespace fdris
