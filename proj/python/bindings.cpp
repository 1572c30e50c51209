// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Arrays cross the boundary as float64 / uint8 NumPy arrays.
// ConfigError and DataError surface as ValueError subclasses, NumericError as
// an ArithmeticError subclass.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sten/checkpoint.hpp"
#include "sten/config.hpp"
#include "sten/errors.hpp"
#include "sten/metrics.hpp"
#include "sten/objectives.hpp"
#include "sten/report.hpp"
#include "sten/scoring.hpp"
#include "sten/series.hpp"
#include "sten/synth.hpp"
#include "sten/training.hpp"

namespace py = pybind11;
using namespace sten;

namespace {

using Labels = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Doubles = py::array_t<double, py::array::c_style | py::array::forcecast>;

MultivariateSeries to_series(const Mat& values, const std::optional<Labels>& labels) {
  MultivariateSeries s;
  s.values = values;
  if (labels) {
    s.labels = std::vector<std::uint8_t>(labels->data(), labels->data() + labels->size());
  }
  s.validate();
  return s;
}

std::vector<double> to_vec(const Doubles& a) { return {a.data(), a.data() + a.size()}; }
std::vector<std::uint8_t> to_vec(const Labels& a) { return {a.data(), a.data() + a.size()}; }

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }
py::array_t<std::uint8_t> to_array(const std::vector<std::uint8_t>& v) {
  return py::array_t<std::uint8_t>(v.size(), v.data());
}

py::dict loss_dict(const LossBreakdown& l) {
  py::dict d;
  d["otn"] = l.otn;
  d["dsn"] = l.dsn;
  d["ep"] = l.ep;
  d["total"] = l.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sten, m) {
  m.doc() = "Spatial-temporal normality learning for multivariate time-series anomaly detection";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<RunConfig>(m, "Config")
      .def(py::init<>())
      .def("set", [](RunConfig& c, const std::string& k, const std::string& v) { c.set(k, v); })
      .def("apply_file", &RunConfig::apply_file)
      .def("finalize", &RunConfig::finalize)
      .def("echo", &RunConfig::echo)
      .def_readwrite("seed", &RunConfig::seed)
      .def_static("keys", &config_keys);

  py::class_<TrainedModel>(m, "Model")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const TrainedModel& model, const std::filesystem::path& p) { save_checkpoint(p, model); })
      .def("to_bytes",
           [](const TrainedModel& model) {
             const auto b = serialize_checkpoint(model);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def_static("from_bytes",
                  [](const py::bytes& b) {
                    const std::string s = b;
                    return deserialize_checkpoint(std::vector<std::uint8_t>(s.begin(), s.end()));
                  })
      .def_readonly("input_dim", &TrainedModel::input_dim)
      .def_property_readonly("config_text", [](const TrainedModel& model) { return train_config_to_text(model.config); })
      .def_property_readonly("eta_checksum", [](const TrainedModel& model) { return model.eta.checksum(); })
      .def_property_readonly("trace", [](const TrainedModel& model) {
        py::list out;
        for (const auto& l : model.trace) {
          out.append(loss_dict(l));
        }
        return out;
      });

  m.def(
      "synth",
      [](const RunConfig& c) {
        const SynthData d = synth_generate(c.synth);
        py::dict out;
        out["train"] = d.train.values;
        out["test"] = d.test.values;
        out["labels"] = to_array(*d.test.labels);
        py::list segs;
        for (const auto& s : d.segments) {
          segs.append(py::make_tuple(s.start, s.end, to_string(s.type), s.dims));
        }
        out["segments"] = segs;
        return out;
      },
      py::arg("config"), "Generate a seeded synthetic train/test pair.");

  m.def(
      "train",
      [](const Mat& values, const RunConfig& c) {
        const MultivariateSeries s = to_series(values, std::nullopt);
        py::gil_scoped_release release;
        return train(s, c.train);
      },
      py::arg("values"), py::arg("config"), "Train a model on an (N, D) array of normal data.");

  m.def(
      "score",
      [](const TrainedModel& model, const Mat& values, const RunConfig& c, const std::optional<Mat>& train_values) {
        const MultivariateSeries test = to_series(values, std::nullopt);
        std::optional<MultivariateSeries> refs;
        if (train_values) {
          refs = to_series(*train_values, std::nullopt);
        }
        ScoreSeries s;
        {
          py::gil_scoped_release release;
          s = score_series(model, test, c.score, refs ? &*refs : nullptr);
        }
        py::dict out;
        out["score"] = to_array(s.score);
        out["otn"] = to_array(s.otn);
        out["dsn"] = to_array(s.dsn);
        return out;
      },
      py::arg("model"), py::arg("values"), py::arg("config"), py::arg("train_values") = py::none(),
      "Per-timestamp anomaly scores for an (N, D) test array.");

  m.def(
      "evaluate_json",
      [](const Doubles& scores, const Labels& labels, const RunConfig& c, const std::string& point_adjust) {
        if (scores.size() != labels.size()) {
          throw DataError("scores and labels differ in length");
        }
        return metrics_document(to_vec(scores), to_vec(labels), c.eval, point_adjust_from_string(point_adjust))
            .dump();
      },
      py::arg("scores"), py::arg("labels"), py::arg("config"), py::arg("point_adjust") = "on");

  m.def(
      "roc_auc", [](const Doubles& s, const Labels& y) { return roc_auc(to_vec(s), to_vec(y)); }, py::arg("scores"),
      py::arg("labels"));
  m.def(
      "pr_auc", [](const Doubles& s, const Labels& y) { return pr_auc(to_vec(s), to_vec(y)); }, py::arg("scores"),
      py::arg("labels"));
  m.def(
      "best_f1",
      [](const Doubles& s, const Labels& y) -> std::optional<py::dict> {
        const auto r = best_f1(to_vec(s), to_vec(y));
        if (!r) {
          return std::nullopt;
        }
        py::dict d;
        d["f1"] = r->f1;
        d["threshold"] = r->threshold;
        d["precision"] = r->precision;
        d["recall"] = r->recall;
        return d;
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "point_adjust",
      [](const Doubles& s, const Labels& y) {
        return to_array(point_adjust(to_vec(s), events_from_binary(to_vec(y))));
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "affiliation",
      [](const Labels& pred, const Labels& y) {
        const auto r = affiliation(events_from_binary(to_vec(pred)), events_from_binary(to_vec(y)),
                                   static_cast<std::size_t>(y.size()));
        py::dict d;
        d["precision"] = r.precision ? py::cast(*r.precision) : py::none();
        d["recall"] = r.recall;
        d["f1"] = r.f1 ? py::cast(*r.f1) : py::none();
        return d;
      },
      py::arg("predictions"), py::arg("labels"));
  m.def(
      "range_auc",
      [](const Doubles& s, const Labels& y, double width) {
        const auto a = range_auc(to_vec(s), events_from_binary(to_vec(y)), width);
        return py::make_tuple(a.roc, a.pr);
      },
      py::arg("scores"), py::arg("labels"), py::arg("width"));
  m.def(
      "vus",
      [](const Doubles& s, const Labels& y, double max_width, double step) {
        const auto a = vus(to_vec(s), events_from_binary(to_vec(y)), max_width, step);
        return py::make_tuple(a.roc, a.pr);
      },
      py::arg("scores"), py::arg("labels"), py::arg("max_width"), py::arg("step") = 1.0);
  m.def(
      "threshold_percentile",
      [](const Doubles& s, double delta) { return to_array(threshold_percentile(to_vec(s), delta)); },
      py::arg("scores"), py::arg("delta"));
  m.def(
      "js_divergence",
      [](const Doubles& p, const Doubles& q) { return js_divergence(to_vec(p), to_vec(q)); }, py::arg("p"),
      py::arg("q"));
}
