/* Copyright 2026 The mcda Authors.

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

#pragma once

#include <string>

#include "json.hpp"
#include "mcda/adaptation.hpp"
#include "mcda/imaging.hpp"
#include "mcda/losses.hpp"
#include "mcda/metrics.hpp"
#include "mcda/network.hpp"

namespace mcda {

using Json = nlohmann::ordered_json;

void to_json(Json& j, const ArchConfig& v);
void to_json(Json& j, const AdamConfig& v);
void to_json(Json& j, const LossWeights& v);
void to_json(Json& j, const BoundaryScheduleConfig& v);
void to_json(Json& j, const AugmentConfig& v);
void to_json(Json& j, const DomainParams& v);
void to_json(Json& j, const PretrainConfig& v);
void to_json(Json& j, const AdaptationConfig& v);
void to_json(Json& j, const ClassMetrics& v);
void to_json(Json& j, const MetricsReport& v);
void to_json(Json& j, const EpochRecord& v);
void to_json(Json& j, const RunRecord& v);

// Strict readers: absent keys keep the value already in `out`, unknown keys
// and type mismatches throw ConfigError naming the dotted field path.
void read_json(const Json& j, const std::string& path, ArchConfig& out);
void read_json(const Json& j, const std::string& path, AdamConfig& out);
void read_json(const Json& j, const std::string& path, LossWeights& out);
void read_json(const Json& j, const std::string& path, BoundaryScheduleConfig& out);
void read_json(const Json& j, const std::string& path, AugmentConfig& out);
void read_json(const Json& j, const std::string& path, DomainParams& out);
void read_json(const Json& j, const std::string& path, PretrainConfig& out);
void read_json(const Json& j, const std::string& path, AdaptationConfig& out);

// Lossless inverses of the metric/record writers above.
MetricsReport metrics_from_json(const Json& j);
RunRecord run_record_from_json(const Json& j);

template <class T>
std::string to_json_string(const T& v, int indent = -1) {
  Json j = v;
  return j.dump(indent);
}

std::string to_string(BackgroundTexture t);
BackgroundTexture parse_texture(const std::string& s);

}  // namespace mcda
