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

#include "mcda/serialization.hpp"

#include <set>
#include <type_traits>

namespace mcda {
namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class T>
void read_value(const Json& j, const std::string& path, T& out);

template <class T, std::size_t N>
void read_value(const Json& j, const std::string& path, std::array<T, N>& out) {
  if (!j.is_array() || j.size() != N) {
    throw ConfigError(path + ": expected an array of " + std::to_string(N) + " numbers");
  }
  for (std::size_t i = 0; i < N; ++i) read_value(j[i], path + "[" + std::to_string(i) + "]", out[i]);
}

template <class T>
void read_value(const Json& j, const std::string& path, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
    out = j.get<bool>();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
      throw ConfigError(path + ": expected a non-negative integer");
    }
    out = j.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    out = j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    out = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, BackgroundTexture>) {
    if (!j.is_string()) throw ConfigError(path + ": expected a texture name");
    try {
      out = parse_texture(j.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  } else if constexpr (is_vector<T>::value) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array");
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      typename T::value_type v{};
      read_value(j[i], path + "[" + std::to_string(i) + "]", v);
      out.push_back(std::move(v));
    }
  } else {
    read_json(j, path, out);
  }
}

class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) {
      throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
    }
  }

  template <class T>
  Fields& operator()(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read_value(*it, join(path_, key), out);
    return *this;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()) + ": unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

std::string to_string(BackgroundTexture t) {
  switch (t) {
    case BackgroundTexture::kFlat: return "flat";
    case BackgroundTexture::kBlotches: return "blotches";
    case BackgroundTexture::kStripes: return "stripes";
  }
  return "flat";
}

BackgroundTexture parse_texture(const std::string& s) {
  if (s == "flat") return BackgroundTexture::kFlat;
  if (s == "blotches") return BackgroundTexture::kBlotches;
  if (s == "stripes") return BackgroundTexture::kStripes;
  throw ConfigError("unknown texture '" + s + "' (flat, blotches, stripes)");
}

void to_json(Json& j, const ArchConfig& v) {
  j = Json{{"backbone", v.backbone},          {"in_channels", v.in_channels},
           {"num_classes", v.num_classes},    {"encoder_channels", v.encoder_channels},
           {"feature_channels", v.feature_channels}, {"feature_tap", v.feature_tap},
           {"norm", v.norm},
           {"input_height", v.input_height},  {"input_width", v.input_width}};
}

void read_json(const Json& j, const std::string& path, ArchConfig& out) {
  Fields(j, path)("backbone", out.backbone)("in_channels", out.in_channels)(
      "num_classes", out.num_classes)("encoder_channels", out.encoder_channels)(
      "feature_channels", out.feature_channels)("feature_tap", out.feature_tap)("norm", out.norm)(
      "input_height", out.input_height)("input_width", out.input_width)
      .finish();
}

void to_json(Json& j, const AdamConfig& v) {
  j = Json{{"lr", v.lr}, {"beta1", v.beta1}, {"beta2", v.beta2}, {"eps", v.eps}};
}

void read_json(const Json& j, const std::string& path, AdamConfig& out) {
  Fields(j, path)("lr", out.lr)("beta1", out.beta1)("beta2", out.beta2)("eps", out.eps).finish();
}

void to_json(Json& j, const LossWeights& v) { j = Json{{"alpha", v.alpha}, {"beta", v.beta}}; }

void read_json(const Json& j, const std::string& path, LossWeights& out) {
  Fields(j, path)("alpha", out.alpha)("beta", out.beta).finish();
}

void to_json(Json& j, const BoundaryScheduleConfig& v) {
  j = Json{{"ce_epochs", v.ce_epochs}, {"dice_epochs", v.dice_epochs}};
}

void read_json(const Json& j, const std::string& path, BoundaryScheduleConfig& out) {
  Fields(j, path)("ce_epochs", out.ce_epochs)("dice_epochs", out.dice_epochs).finish();
}

void to_json(Json& j, const AugmentConfig& v) {
  j = Json{{"hflip_prob", v.hflip_prob},
           {"vflip_prob", v.vflip_prob},
           {"rotate_prob", v.rotate_prob},
           {"max_rotate_deg", v.max_rotate_deg},
           {"elastic_prob", v.elastic_prob},
           {"elastic_grid", v.elastic_grid},
           {"elastic_magnitude", v.elastic_magnitude},
           {"contrast_prob", v.contrast_prob},
           {"contrast_min", v.contrast_min},
           {"contrast_max", v.contrast_max},
           {"noise_prob", v.noise_prob},
           {"noise_sigma_max", v.noise_sigma_max},
           {"erase_prob", v.erase_prob},
           {"erase_area_min", v.erase_area_min},
           {"erase_area_max", v.erase_area_max}};
}

void read_json(const Json& j, const std::string& path, AugmentConfig& out) {
  Fields(j, path)("hflip_prob", out.hflip_prob)("vflip_prob", out.vflip_prob)(
      "rotate_prob", out.rotate_prob)("max_rotate_deg", out.max_rotate_deg)(
      "elastic_prob", out.elastic_prob)("elastic_grid", out.elastic_grid)(
      "elastic_magnitude", out.elastic_magnitude)("contrast_prob", out.contrast_prob)(
      "contrast_min", out.contrast_min)("contrast_max", out.contrast_max)(
      "noise_prob", out.noise_prob)("noise_sigma_max", out.noise_sigma_max)(
      "erase_prob", out.erase_prob)("erase_area_min", out.erase_area_min)(
      "erase_area_max", out.erase_area_max)
      .finish();
}

void to_json(Json& j, const DomainParams& v) {
  j = Json{{"name", v.name},
           {"size", v.size},
           {"disc_radius_min", v.disc_radius_min},
           {"disc_radius_max", v.disc_radius_max},
           {"cup_ratio_min", v.cup_ratio_min},
           {"cup_ratio_max", v.cup_ratio_max},
           {"center_jitter", v.center_jitter},
           {"cup_offset", v.cup_offset},
           {"background_rgb", v.background_rgb},
           {"disc_rgb", v.disc_rgb},
           {"cup_rgb", v.cup_rgb},
           {"palette_jitter", v.palette_jitter},
           {"contrast", v.contrast},
           {"edge_softness", v.edge_softness},
           {"texture", to_string(v.texture)},
           {"texture_amplitude", v.texture_amplitude},
           {"vessel_count", v.vessel_count},
           {"vessel_darkness", v.vessel_darkness},
           {"blur_sigma", v.blur_sigma},
           {"noise_sigma", v.noise_sigma}};
}

void read_json(const Json& j, const std::string& path, DomainParams& out) {
  Fields(j, path)("name", out.name)("size", out.size)("disc_radius_min", out.disc_radius_min)(
      "disc_radius_max", out.disc_radius_max)("cup_ratio_min", out.cup_ratio_min)(
      "cup_ratio_max", out.cup_ratio_max)("center_jitter", out.center_jitter)(
      "cup_offset", out.cup_offset)("background_rgb", out.background_rgb)(
      "disc_rgb", out.disc_rgb)("cup_rgb", out.cup_rgb)("palette_jitter", out.palette_jitter)(
      "contrast", out.contrast)("edge_softness", out.edge_softness)("texture", out.texture)(
      "texture_amplitude", out.texture_amplitude)("vessel_count", out.vessel_count)(
      "vessel_darkness", out.vessel_darkness)("blur_sigma", out.blur_sigma)(
      "noise_sigma", out.noise_sigma)
      .finish();
}

void to_json(Json& j, const PretrainConfig& v) {
  j = Json{{"schedule", v.schedule},
           {"optimizer", v.optimizer},
           {"batch_size", v.batch_size},
           {"augment", v.augment},
           {"augment_config", v.augment_config},
           {"seed", v.seed},
           {"checkpoint_every", v.checkpoint_every}};
}

void read_json(const Json& j, const std::string& path, PretrainConfig& out) {
  Fields(j, path)("schedule", out.schedule)("optimizer", out.optimizer)(
      "batch_size", out.batch_size)("augment", out.augment)("augment_config", out.augment_config)(
      "seed", out.seed)("checkpoint_every", out.checkpoint_every)
      .finish();
}

void to_json(Json& j, const AdaptationConfig& v) {
  j = Json{{"weights", v.weights},
           {"optimizer", v.optimizer},
           {"adam", v.adam},
           {"batch_size", v.batch_size},
           {"epochs", v.epochs},
           {"seg_threshold", v.seg_threshold},
           {"pseudo_threshold", v.pseudo_threshold},
           {"soft_pseudo_labels", v.soft_pseudo_labels},
           {"tseg_positive_only", v.tseg_positive_only},
           {"seed", v.seed}};
}

void read_json(const Json& j, const std::string& path, AdaptationConfig& out) {
  Fields(j, path)("weights", out.weights)("optimizer", out.optimizer)("adam", out.adam)(
      "batch_size", out.batch_size)("epochs", out.epochs)("seg_threshold", out.seg_threshold)(
      "pseudo_threshold", out.pseudo_threshold)("soft_pseudo_labels", out.soft_pseudo_labels)(
      "tseg_positive_only", out.tseg_positive_only)("seed", out.seed)
      .finish();
}

void to_json(Json& j, const ClassMetrics& v) {
  Json asd = Json::array();
  for (const auto& a : v.asd_per_image) asd.push_back(a ? Json(*a) : Json(nullptr));
  j = Json{{"name", v.name},
           {"dice_mean", v.dice_mean},
           {"dice_std", v.dice_std},
           {"asd_mean", v.asd_mean},
           {"asd_std", v.asd_std},
           {"asd_excluded", v.asd_excluded},
           {"dice_per_image", v.dice_per_image},
           {"asd_per_image", asd}};
}

void to_json(Json& j, const MetricsReport& v) {
  j = Json{{"sample_count", v.sample_count},
           {"disc", v.classes[kDisc]},
           {"cup", v.classes[kCup]},
           {"avg_dice", v.avg_dice()},
           {"avg_asd", v.avg_asd()}};
}

MetricsReport metrics_from_json(const Json& j) {
  MetricsReport r;
  r.sample_count = j.at("sample_count").get<std::size_t>();
  const char* keys[kNumClasses] = {"disc", "cup"};
  for (int c = 0; c < kNumClasses; ++c) {
    const Json& cj = j.at(keys[c]);
    ClassMetrics& m = r.classes[c];
    m.name = cj.at("name").get<std::string>();
    m.dice_mean = cj.at("dice_mean").get<double>();
    m.dice_std = cj.at("dice_std").get<double>();
    m.asd_mean = cj.at("asd_mean").get<double>();
    m.asd_std = cj.at("asd_std").get<double>();
    m.asd_excluded = cj.at("asd_excluded").get<std::size_t>();
    m.dice_per_image = cj.at("dice_per_image").get<std::vector<double>>();
    for (const auto& a : cj.at("asd_per_image")) {
      m.asd_per_image.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
    }
  }
  return r;
}

void to_json(Json& j, const EpochRecord& v) {
  j = Json{{"epoch", v.epoch}, {"losses", Json(v.losses)}};
  if (!v.boundary_kind.empty()) j["boundary_kind"] = v.boundary_kind;
  if (v.metrics) j["metrics"] = *v.metrics;
  if (!v.checkpoint.empty()) j["checkpoint"] = v.checkpoint;
}

static EpochRecord epoch_from_json(const Json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<int>();
  for (const auto& [k, val] : j.at("losses").items()) e.losses[k] = val.get<double>();
  e.boundary_kind = j.value("boundary_kind", "");
  if (j.contains("metrics")) e.metrics = metrics_from_json(j.at("metrics"));
  e.checkpoint = j.value("checkpoint", "");
  return e;
}

void to_json(Json& j, const RunRecord& v) {
  j = Json{{"kind", v.kind},
           {"config", v.config_json.empty() ? Json::object() : Json::parse(v.config_json)},
           {"epochs", v.epochs},
           {"checkpoints", v.checkpoints},
           {"warnings", v.warnings},
           {"wall_clock_seconds", v.wall_clock_seconds}};
  if (v.initial_metrics) j["initial_metrics"] = *v.initial_metrics;
}

RunRecord run_record_from_json(const Json& j) {
  RunRecord r;
  r.kind = j.at("kind").get<std::string>();
  r.config_json = j.at("config").dump();
  for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from_json(e));
  r.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  if (j.contains("initial_metrics")) r.initial_metrics = metrics_from_json(j.at("initial_metrics"));
  return r;
}

}  // namespace mcda
