#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "dentmrf/config.hpp"
#include "dentmrf/dataset.hpp"
#include "dentmrf/posterior.hpp"
#include "dentmrf/potts.hpp"
#include "dentmrf/ratio.hpp"
#include "dentmrf/sampler.hpp"
#include "dentmrf/synthetic.hpp"

namespace py = pybind11;
using namespace dentmrf;

namespace {

ToothField tooth_field(double psi, const std::array<double, 2>& alpha) { return ToothField{psi, {0.0, alpha[0], alpha[1]}}; }

py::dict samples_dict(const PosteriorSamples& s) {
  py::dict draws;
  for (std::size_t i = 0; i < s.num_params(); ++i) {
    const auto col = s.series(i);
    draws[py::str(s.labels()[i].key())] = std::vector<double>(col.begin(), col.end());
  }
  py::dict out;
  out["iterations"] = s.iterations();
  out["draws"] = draws;
  return out;
}

}  // namespace

PYBIND11_MODULE(_dentmrf, m) {
  m.doc() = "Bayesian spatial Potts models for dental survey data";
  m.attr("__version__") = DENTMRF_VERSION;

  py::class_<DentitionGraph>(m, "Dentition")
      .def(py::init([](std::vector<int> teeth) { return DentitionGraph::subgraph(teeth); }), py::arg("teeth"))
      .def_static("full", &DentitionGraph::full)
      .def_property_readonly("teeth", &DentitionGraph::tooth_ids)
      .def_property_readonly("num_teeth", &DentitionGraph::num_teeth)
      .def_property_readonly("num_surfaces", &DentitionGraph::num_surfaces)
      .def("num_tooth_edges", [](const DentitionGraph& g) { return g.tooth_edge_slots().size(); })
      .def("pair_counts", [](const DentitionGraph& g) {
        std::map<std::string, std::size_t> out;
        for (auto k : kAllInteractions) out[to_string(k)] = g.pair_slots(k).size();
        return out;
      });

  m.def(
      "tooth_log_partition",
      [](const std::vector<int>& teeth, double psi, std::array<double, 2> alpha) {
        return exact_log_partition(DentitionGraph::subgraph(teeth), tooth_field(psi, alpha));
      },
      py::arg("teeth"), py::arg("psi"), py::arg("alpha"),
      "Exact log normalizer of the tooth-level model by enumeration.");

  m.def(
      "surface_log_partition",
      [](const std::vector<int>& teeth, std::array<double, 5> psi, std::array<double, 2> alpha) {
        const auto g = DentitionGraph::subgraph(teeth);
        const auto state = MouthState::all_present(g);
        return exact_log_partition(g, state.x, SurfaceField{psi, {0.0, alpha[0], alpha[1]}});
      },
      py::arg("teeth"), py::arg("psi"), py::arg("alpha"),
      "Exact log normalizer of the surface level with every tooth present.");

  m.def(
      "sample_tooth_states",
      [](const std::vector<int>& teeth, double psi, std::array<double, 2> alpha, int sweeps, std::uint64_t seed) {
        const auto g = DentitionGraph::subgraph(teeth);
        const auto f = tooth_field(psi, alpha);
        Rng rng(seed);
        auto state = MouthState::all_present(g);
        std::vector<std::vector<int>> out;
        out.reserve(sweeps);
        for (int s = 0; s < sweeps; ++s) {
          tooth_sweep(state, g, f, rng);
          out.emplace_back(state.x.begin(), state.x.end());
        }
        return out;
      },
      py::arg("teeth"), py::arg("psi"), py::arg("alpha"), py::arg("sweeps"), py::arg("seed") = 1,
      "Tooth codes after each Gibbs sweep.");

  m.def(
      "noisy_log_ratio",
      [](const std::vector<int>& teeth, double psi0, std::array<double, 2> alpha0, double psi1,
         std::array<double, 2> alpha1, int n_aux, int sweeps, std::uint64_t seed) {
        const auto g = DentitionGraph::subgraph(teeth);
        AuxSettings aux;
        aux.n_aux = n_aux;
        aux.sweeps = sweeps;
        NoisyPartitionRatio ratio(aux);
        Rng rng(seed);
        return ratio.log_tooth(MouthState::all_present(g), g, tooth_field(psi0, alpha0), tooth_field(psi1, alpha1), rng);
      },
      py::arg("teeth"), py::arg("psi0"), py::arg("alpha0"), py::arg("psi1"), py::arg("alpha1"), py::arg("n_aux") = 20,
      py::arg("sweeps") = 50, py::arg("seed") = 1,
      "Importance estimate of log[kappa(theta0) / kappa(theta1)] at the tooth level.");

  m.def(
      "validate_dataset",
      [](const std::filesystem::path& dir) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& i : validate(parse_dataset(dir))) out.emplace_back(i.record, i.message);
        return out;
      },
      py::arg("data_dir"), "List of (record, message) problems; empty when the dataset is valid.");

  m.def(
      "simulate",
      [](const std::filesystem::path& out, const std::string& spec_json, std::uint64_t seed) {
        const auto spec = spec_json.empty() ? SyntheticSpec{} : parse_synthetic_spec(spec_json);
        const auto data = generate_synthetic(spec, seed);
        write_synthetic(data, out);
        return data.truth_json();
      },
      py::arg("out_dir"), py::arg("spec_json") = "", py::arg("seed") = 1,
      "Write a synthetic dataset and return its ground truth as JSON.");

  m.def(
      "fit",
      [](const std::filesystem::path& data_dir, const std::string& config_json) {
        const auto cfg = parse_fit_config(config_json.empty() ? "{}" : config_json);
        const auto data = load_dataset(data_dir);
        PosteriorSamples samples;
        {
          py::gil_scoped_release release;
          samples = run_chain(data, cfg.model, cfg.chain);
        }
        return samples_dict(samples);
      },
      py::arg("data_dir"), py::arg("config_json") = "",
      "Run the sampler; returns {'iterations': [...], 'draws': {label: [...]}}.");

  m.def(
      "summarize",
      [](const std::filesystem::path& samples_csv) {
        std::ostringstream out;
        write_summary(summarize(PosteriorSamples::read_csv(samples_csv)), out);
        return out.str();
      },
      py::arg("samples_csv"), "Summary table (CSV text) of a samples file.");

  m.def(
      "hpd_interval",
      [](const std::vector<double>& values, double mass) {
        const auto h = hpd_interval(values, mass);
        return std::make_pair(h.lo, h.hi);
      },
      py::arg("values"), py::arg("mass") = 0.95);
  m.def("effective_sample_size", [](const std::vector<double>& v) { return effective_sample_size(v); },
        py::arg("values"));
}
