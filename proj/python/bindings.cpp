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

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "mcda/adaptation.hpp"
#include "mcda/boundary.hpp"
#include "mcda/errors.hpp"
#include "mcda/imaging.hpp"
#include "mcda/metrics.hpp"
#include "mcda/network.hpp"
#include "mcda/serialization.hpp"

namespace py = pybind11;
using namespace mcda;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Planes cross the boundary as (C, H, W) float64 copies; 2-D arrays are one
// channel.
Planes to_planes(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) {
    throw ShapeError("expected a 2-D or 3-D array, got " + std::to_string(a.ndim()) + "-D");
  }
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(0)) : 1;
  const int h = static_cast<int>(a.shape(a.ndim() - 2));
  const int w = static_cast<int>(a.shape(a.ndim() - 1));
  Planes p(c, h, w);
  std::memcpy(p.data().data(), a.data(), p.size() * sizeof(double));
  return p;
}

Array to_array(const Planes& p) {
  Array a({p.channels(), p.height(), p.width()});
  std::memcpy(a.mutable_data(), p.data().data(), p.size() * sizeof(double));
  return a;
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::object& o) {
  if (o.is_none()) return Json::object();
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

template <class T>
T config_from(const py::object& o, const std::string& scope) {
  T out;
  read_json(from_py(o), scope, out);
  return out;
}

std::vector<Planes> images_of(const std::vector<Array>& arrays) {
  std::vector<Planes> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(to_planes(a));
  return out;
}

py::dict output_dict(const ModelOutput& o) {
  py::dict d;
  d["seg_probs"] = to_array(o.seg_probs);
  d["boundary_probs"] = to_array(o.boundary_probs);
  d["features"] = to_array(o.features);
  return d;
}

}  // namespace

PYBIND11_MODULE(_mcda, m) {
  m.doc() = "Boundary- and feature-consistent test-time adaptation for disc/cup segmentation";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<LoadError>(m, "LoadError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<TrainingError>(m, "TrainingError", base);

  m.attr("DISC") = kDisc;
  m.attr("CUP") = kCup;

  py::class_<AnnotatedSample>(m, "Sample")
      .def(py::init([](std::string name, const Array& image, const Array& mask) {
             return make_sample(std::move(name), to_planes(image), to_planes(mask));
           }),
           py::arg("name"), py::arg("image"), py::arg("mask"))
      .def_readonly("name", &AnnotatedSample::name)
      .def_property_readonly("image", [](const AnnotatedSample& s) { return to_array(s.image); })
      .def_property_readonly("mask", [](const AnnotatedSample& s) { return to_array(s.mask); })
      .def_property_readonly("boundary",
                             [](const AnnotatedSample& s) { return to_array(s.boundary); })
      .def("__repr__", [](const AnnotatedSample& s) { return "<Sample " + s.name + ">"; });

  m.def(
      "synth",
      [](const std::string& preset, int count, std::uint64_t seed, const py::object& overrides) {
        DomainParams p = domain_preset(preset);
        read_json(from_py(overrides), "domain", p);
        return synth_dataset(p, count, seed);
      },
      py::arg("preset") = "synthetic-source", py::arg("count") = 1, py::arg("seed") = 0,
      py::arg("overrides") = py::none(),
      "Draw `count` labeled images from a synthetic preset, optionally overriding its "
      "domain parameters with a dict.");
  m.def("load_dataset", &load_labeled_dataset, py::arg("directory"),
        "Load a directory with images/ and masks/.");
  m.def("write_dataset", &write_dataset, py::arg("samples"), py::arg("directory"));

  m.def("sobel_magnitude", [](const Array& a) { return to_array(sobel_magnitude(to_planes(a))); });
  m.def("hard_boundary", [](const Array& a) { return to_array(hard_boundary(to_planes(a))); });
  m.def("soft_boundary", [](const Array& a) { return to_array(soft_boundary(to_planes(a))); });

  m.def("dice_score", [](const Array& p, const Array& t) {
    return dice_score(to_planes(p), to_planes(t));
  });
  m.def(
      "asd",
      [](const Array& p, const Array& t) { return asd(to_planes(p), to_planes(t)); },
      "Average surface distance, or None when either surface is empty.");

  py::class_<ModelParams>(m, "Model")
      .def_property_readonly("arch", [](const ModelParams& p) { return to_py(Json(p.arch)); })
      .def_property_readonly("parameter_count",
                             [](const ModelParams& p) { return p.values.size(); })
      .def("forward",
           [](const ModelParams& p, const Array& image) {
             return output_dict(SegNet(p.arch).forward(p, to_planes(image)));
           })
      .def(
          "save",
          [](const ModelParams& p, const std::filesystem::path& path, const std::string& note) {
            save_checkpoint(p, path, note);
          },
          py::arg("path"), py::arg("note") = "")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def(py::self == py::self);

  m.def(
      "init_model",
      [](const py::object& arch, std::uint64_t seed) {
        return SegNet(config_from<ArchConfig>(arch, "arch")).init(seed);
      },
      py::arg("arch") = py::none(), py::arg("seed") = 0);

  m.def(
      "pretrain",
      [](const std::vector<AnnotatedSample>& data, const py::object& arch,
         const py::object& config) {
        const auto a = config_from<ArchConfig>(arch, "arch");
        const auto c = config_from<PretrainConfig>(config, "pretrain");
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = pretrain(data, a, c);
        }
        return py::make_tuple(r.params, to_py(Json(r.record)));
      },
      py::arg("samples"), py::arg("arch") = py::none(), py::arg("config") = py::none(),
      "Train a source model. Returns (model, record).");

  m.def(
      "pseudo_labels",
      [](const ModelParams& p, const std::vector<Array>& images, double threshold) {
        py::list out;
        for (const auto& l : generate_pseudo_labels(p, images_of(images), threshold)) {
          out.append(py::make_tuple(to_array(l.hard), to_array(l.soft)));
        }
        return out;
      },
      py::arg("model"), py::arg("images"), py::arg("threshold") = 0.5,
      "Frozen (hard, soft) pseudo labels of the model on each image.");

  m.def(
      "adapt",
      [](const ModelParams& source, const std::vector<Array>& images, const py::object& config,
         const std::vector<AnnotatedSample>& eval_set) {
        const auto c = config_from<AdaptationConfig>(config, "adaptation");
        const auto planes = images_of(images);
        TrainOptions opts;
        opts.eval_set = eval_set;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = adapt(source, planes, generate_pseudo_labels(source, planes, c.pseudo_threshold),
                    c, opts);
        }
        return py::make_tuple(r.params, to_py(Json(r.record)));
      },
      py::arg("model"), py::arg("images"), py::arg("config") = py::none(),
      py::arg("eval_set") = std::vector<AnnotatedSample>{},
      "Adapt a copy of the model on unlabeled images. Returns (model, record).");

  m.def(
      "evaluate",
      [](const ModelParams& p, const std::vector<AnnotatedSample>& data, double threshold) {
        return to_py(Json(evaluate(p, data, threshold)));
      },
      py::arg("model"), py::arg("samples"), py::arg("threshold") = 0.5);

  m.def(
      "format_table",
      [](const std::vector<std::pair<std::string, py::object>>& rows) {
        std::vector<std::pair<std::string, MetricsReport>> reports;
        for (const auto& [label, r] : rows) reports.emplace_back(label, metrics_from_json(from_py(r)));
        return format_metrics_table(reports);
      },
      py::arg("rows"), "Render [(label, report), ...] as the per-class comparison table.");
}
