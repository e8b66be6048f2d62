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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcda/adaptation.hpp"
#include "mcda/imaging.hpp"
#include "mcda/network.hpp"
#include "mcda/serialization.hpp"

namespace mcda {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kOutputRootEnv = "MCDA_OUTPUT_ROOT";

// A dataset is either a directory (images/, masks/) or a synthetic preset
// name. Preset datasets use `seed` for the source and `seed + 1` for the
// target so the two never share draws.
struct DatasetSpec {
  std::string source = "synthetic-source";
  std::string target = "synthetic-target";
  std::uint64_t seed = 0;
  int source_count = 200;
  int target_count = 32;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  DatasetSpec dataset;
  ArchConfig arch;
  PretrainConfig pretrain;
  AdaptationConfig adaptation;
  std::string output_dir;  // empty: $MCDA_OUTPUT_ROOT, then ./runs
  std::vector<std::string> report_formats{"txt", "json", "svg"};
};

void to_json(Json& j, const DatasetSpec& v);
void to_json(Json& j, const ExperimentConfig& v);
void read_json(const Json& j, const std::string& path, DatasetSpec& out);
void read_json(const Json& j, const std::string& path, ExperimentConfig& out);

// Throws ConfigError with the offending field on any problem.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& c);

// Preset name or directory. Labeled loads require masks/.
std::vector<AnnotatedSample> resolve_labeled(const std::string& spec, std::uint64_t seed,
                                             int count);
std::vector<std::pair<std::string, Planes>> resolve_images(const std::string& spec,
                                                           std::uint64_t seed, int count);
bool resolves_to_labeled(const std::string& spec);

std::filesystem::path default_output_root(const std::string& configured);

// A run directory is staged under a hidden sibling and renamed into place by
// commit(), so a finished directory is never partially written. An existing
// target is an error unless `force`, in which case the next free sibling
// name (<name>-1, <name>-2, ...) is used.
class RunDirectory {
 public:
  RunDirectory(const std::filesystem::path& requested, bool force);
  ~RunDirectory();
  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;

  // Where files go while the run is in progress.
  const std::filesystem::path& staging() const { return staging_; }
  // The final location.
  const std::filesystem::path& path() const { return final_; }

  void write_text(const std::string& name, const std::string& text) const;
  void commit();

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

// Appends one JSON object per line.
class JsonlLog {
 public:
  explicit JsonlLog(const std::filesystem::path& path);
  void write(const Json& j);

 private:
  std::filesystem::path path_;
};

}  // namespace mcda
