// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "poolab/analysis.h"
#include "poolab/checkpoint.h"
#include "poolab/cli.h"
#include "poolab/errors.h"
#include "poolab/evaltasks.h"
#include "poolab/io.h"
#include "poolab/pooling.h"
#include "poolab/stats.h"

namespace py = pybind11;

namespace poolab {
namespace {

py::array_t<double> ToNumpy(const NdArray& a) {
  std::vector<py::ssize_t> shape(a.shape().begin(), a.shape().end());
  py::array_t<double> out(shape);
  std::copy(a.data().begin(), a.data().end(), out.mutable_data());
  return out;
}

py::object Optional(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict WilcoxonDict(const WilcoxonResult& r) {
  py::dict d;
  d["w_plus"] = r.w_plus;
  d["w_minus"] = r.w_minus;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["n_effective"] = r.n_effective;
  d["exact"] = r.exact;
  return d;
}

class Encoder {
 public:
  explicit Encoder(const std::string& path) : ckpt_(LoadCheckpoint(path)) {}
  py::array_t<double> Encode(const std::vector<std::string>& texts) const {
    NdArray out;
    {
      py::gil_scoped_release release;
      out = poolab::Encode(ckpt_.model, texts);
    }
    return ToNumpy(out);
  }
  std::string config_json() const { return ckpt_.config.ToJson(); }
  std::uint64_t checksum() const { return ckpt_.checksum; }

 private:
  LoadedCheckpoint ckpt_;
};

}  // namespace
}  // namespace poolab

PYBIND11_MODULE(_poolab, m) {
  using namespace poolab;
  m.doc() = "Bindings for the poolab C++ library.";

  auto base = py::register_exception<Error>(m, "PoolabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());

  m.def(
      "wilcoxon",
      [](const std::vector<double>& x, const std::vector<double>& y, const std::string& zeros) {
        ZeroMethod z;
        if (zeros == "wilcox") z = ZeroMethod::kWilcox;
        else if (zeros == "pratt") z = ZeroMethod::kPratt;
        else throw ConfigError("zeros: expected wilcox or pratt, got " + zeros);
        return WilcoxonDict(WilcoxonSignedRank(x, y, z));
      },
      py::arg("x"), py::arg("y"), py::arg("zeros") = "wilcox",
      "Two-sided Wilcoxon signed-rank test on y - x.");

  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) { return Optional(Spearman(x, y)); },
      py::arg("x"), py::arg("y"), "Spearman correlation, or None when either side is constant.");

  m.def(
      "ndcg_at_k",
      [](const std::vector<std::string>& ranked, const std::map<std::string, double>& qrels, std::size_t k) {
        return NdcgAtK(ranked, qrels, k);
      },
      py::arg("ranked"), py::arg("qrels"), py::arg("k") = 10);

  m.def(
      "v_measure",
      [](const std::vector<int>& gold, const std::vector<int>& predicted) {
        return VMeasure(gold, predicted).v_measure;
      },
      py::arg("gold"), py::arg("predicted"));

  m.def(
      "compare_report",
      [](const std::string& baseline_json, const std::string& challenger_json) {
        const auto b = ResultsFromJson(baseline_json);
        const auto c = ResultsFromJson(challenger_json);
        return RenderReportJson(CompareModels(b, c));
      },
      py::arg("baseline_json"), py::arg("challenger_json"),
      "Report JSON for two results documents given as JSON text.");

  m.def(
      "layer_correlation",
      [](const std::string& dump_path) { return ToNumpy(LayerCorrelation(ReadDump(dump_path)).values); },
      py::arg("dump_path"), "Mean per-item Spearman between layers; NaN where undefined.");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "poolab");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a subcommand in process; returns (exit_code, stdout, stderr).");

  py::class_<Encoder>(m, "Encoder")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def("encode", &Encoder::Encode, py::arg("texts"), "Unit-norm embeddings, one row per text.")
      .def_property_readonly("config_json", &Encoder::config_json)
      .def_property_readonly("checksum", &Encoder::checksum);
}
