/* Copyright 2026 The Polymass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// JSON (de)serialization of the configuration structs. Missing keys keep
// their defaults; unknown keys are rejected so typos do not pass silently.

#pragma once

#include "json.hpp"
#include "polymass/corpus.hpp"
#include "polymass/mass.hpp"
#include "polymass/model.hpp"
#include "polymass/sampler.hpp"
#include "polymass/trainer.hpp"

namespace polymass {

nlohmann::json ToJson(const ModelConfig& c);
nlohmann::json ToJson(const SamplingPolicy& p);
nlohmann::json ToJson(const MaskSpec& m);
nlohmann::json ToJson(const TrainConfig& t);
nlohmann::json ToJson(const CipherSpec& s);
nlohmann::json ToJson(const GeneratorConfig& g);

ModelConfig ModelConfigFromJson(const nlohmann::json& j);
SamplingPolicy SamplingPolicyFromJson(const nlohmann::json& j);
MaskSpec MaskSpecFromJson(const nlohmann::json& j);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);
CipherSpec CipherSpecFromJson(const nlohmann::json& j);
GeneratorConfig GeneratorConfigFromJson(const nlohmann::json& j);

nlohmann::json ParseJsonFile(const std::string& path);

}  // namespace polymass
