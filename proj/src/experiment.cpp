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

#include "mcda/experiment.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mcda {

namespace fs = std::filesystem;

void to_json(Json& j, const DatasetSpec& v) {
  j = Json{{"source", v.source},
           {"target", v.target},
           {"seed", v.seed},
           {"source_count", v.source_count},
           {"target_count", v.target_count}};
}

void to_json(Json& j, const ExperimentConfig& v) {
  j = Json{{"schema_version", v.schema_version},
           {"dataset", v.dataset},
           {"arch", v.arch},
           {"pretrain", v.pretrain},
           {"adaptation", v.adaptation},
           {"output_dir", v.output_dir},
           {"report_formats", v.report_formats}};
}

void read_json(const Json& j, const std::string& path, DatasetSpec& out) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = it.key();
    const std::string where = path + "." + key;
    const Json& v = it.value();
    if (key == "source" || key == "target") {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      (key == "source" ? out.source : out.target) = v.get<std::string>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(where + ": expected a non-negative integer");
      }
      out.seed = v.get<std::uint64_t>();
    } else if (key == "source_count" || key == "target_count") {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      (key == "source_count" ? out.source_count : out.target_count) = v.get<int>();
    } else {
      throw ConfigError(where + ": unknown field");
    }
  }
}

void read_json(const Json& j, const std::string& path, ExperimentConfig& out) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  auto where = [&](const std::string& k) { return path.empty() ? k : path + "." + k; };
  if (!j.contains("schema_version")) throw ConfigError(where("schema_version") + ": required");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = it.key();
    const Json& v = it.value();
    if (key == "schema_version") {
      if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      out.schema_version = v.get<int>();
      if (out.schema_version != kConfigSchemaVersion) {
        throw ConfigError(where(key) + ": unsupported version " +
                          std::to_string(out.schema_version) + " (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
      }
    } else if (key == "dataset") {
      read_json(v, where(key), out.dataset);
    } else if (key == "arch") {
      read_json(v, where(key), out.arch);
    } else if (key == "pretrain") {
      read_json(v, where(key), out.pretrain);
    } else if (key == "adaptation") {
      read_json(v, where(key), out.adaptation);
    } else if (key == "output_dir") {
      if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
      out.output_dir = v.get<std::string>();
    } else if (key == "report_formats") {
      if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of strings");
      out.report_formats.clear();
      for (const auto& f : v) {
        if (!f.is_string()) throw ConfigError(where(key) + ": expected an array of strings");
        out.report_formats.push_back(f.get<std::string>());
      }
    } else {
      throw ConfigError(where(key) + ": unknown field");
    }
  }
}

void validate(const ExperimentConfig& c) {
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + std::to_string(c.schema_version));
  }
  if (c.dataset.source_count <= 0) throw ConfigError("dataset.source_count: must be positive");
  if (c.dataset.target_count <= 0) throw ConfigError("dataset.target_count: must be positive");
  auto scoped = [](const char* scope, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw ConfigError(std::string(scope) + ": " + e.what());
    }
  };
  scoped("arch", [&] { validate_arch(c.arch); });
  scoped("pretrain", [&] { validate(c.pretrain); });
  scoped("adaptation", [&] { validate(c.adaptation); });
  for (const auto& f : c.report_formats) {
    if (f != "txt" && f != "json" && f != "svg") {
      throw ConfigError("report_formats: unknown format '" + f + "' (txt, json, svg)");
    }
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  read_json(j, "", c);
  validate(c);
  return c;
}

bool resolves_to_labeled(const std::string& spec) {
  return is_domain_preset(spec) || dataset_has_masks(spec);
}

namespace {

void require_dataset_dir(const std::string& spec) {
  if (!fs::is_directory(spec)) {
    throw ConfigError("dataset '" + spec + "' is neither a preset (synthetic-source, "
                      "synthetic-target) nor an existing directory");
  }
}

}  // namespace

std::vector<AnnotatedSample> resolve_labeled(const std::string& spec, std::uint64_t seed,
                                             int count) {
  if (is_domain_preset(spec)) {
    return synth_dataset(domain_preset(spec), static_cast<std::size_t>(count), seed);
  }
  require_dataset_dir(spec);
  if (!dataset_has_masks(spec)) {
    throw ConfigError("dataset '" + spec + "' has no masks/ directory; labels are required");
  }
  return load_labeled_dataset(spec);
}

std::vector<std::pair<std::string, Planes>> resolve_images(const std::string& spec,
                                                           std::uint64_t seed, int count) {
  if (is_domain_preset(spec)) {
    std::vector<std::pair<std::string, Planes>> out;
    for (auto& s : synth_dataset(domain_preset(spec), static_cast<std::size_t>(count), seed)) {
      out.emplace_back(s.name, std::move(s.image));
    }
    return out;
  }
  require_dataset_dir(spec);
  return load_unlabeled_images(spec);
}

fs::path default_output_root(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return "runs";
}

RunDirectory::RunDirectory(const fs::path& requested, bool force) : final_(requested) {
  if (fs::exists(final_)) {
    if (!force) {
      throw ConfigError("run directory " + final_.string() +
                        " already exists; pass --force to create a sibling");
    }
    for (int k = 1;; ++k) {
      fs::path cand = final_;
      cand += "-" + std::to_string(k);
      if (!fs::exists(cand)) {
        final_ = cand;
        break;
      }
    }
  }
  const fs::path parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
  fs::create_directories(parent);
  staging_ = parent / ("." + final_.filename().string() + ".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

RunDirectory::~RunDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void RunDirectory::write_text(const std::string& name, const std::string& text) const {
  const fs::path p = staging_ / name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  if (!f) throw Error("short write to " + p.string());
}

void RunDirectory::commit() {
  if (committed_) return;
  if (fs::exists(final_)) {
    throw Error("run directory " + final_.string() + " appeared while the run was in progress");
  }
  fs::rename(staging_, final_);
  committed_ = true;
}

JsonlLog::JsonlLog(const fs::path& path) : path_(path) {
  std::ofstream f(path_, std::ios::trunc);
  if (!f) throw Error("cannot create log " + path_.string());
}

void JsonlLog::write(const Json& j) {
  std::ofstream f(path_, std::ios::app);
  f << j.dump() << "\n";
  if (!f) throw Error("cannot append to " + path_.string());
}

}  // namespace mcda
