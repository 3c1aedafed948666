#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rsm/error.hpp"
#include "rsm/eval.hpp"
#include "rsm/training.hpp"

namespace py = pybind11;
using namespace rsm;

namespace {

using RowMatrix = nn::Matrix<float>;

py::array_t<std::uint8_t> episode_frames(const Dataset& d, std::size_t e) {
  if (e >= d.episodes.size()) throw py::index_error("episode index out of range");
  const auto& frames = d.episodes[e].frames;
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(frames.size()), py::ssize_t{envs::kFrameHeight},
                                 py::ssize_t{envs::kFrameWidth}, py::ssize_t{envs::kFrameChannels}});
  auto* dst = out.mutable_data();
  for (const auto& f : frames) dst = std::copy(f.pixels.begin(), f.pixels.end(), dst);
  return out;
}

std::vector<std::pair<int, std::string>> episode_actions(const Dataset& d, std::size_t e) {
  if (e >= d.episodes.size()) throw py::index_error("episode index out of range");
  std::vector<std::pair<int, std::string>> out;
  for (const auto& a : d.episodes[e].actions) out.emplace_back(a.object_id, std::string(envs::direction_name(a.direction)));
  return out;
}

// Observation at step t of an episode as CHW floats, matching the model input.
RowMatrix observations(const Dataset& d, const std::vector<std::pair<int, int>>& items) {
  std::vector<TransitionIndex> idx;
  for (auto [e, t] : items) {
    if (e < 0 || e >= static_cast<int>(d.episodes.size())) throw py::index_error("episode index out of range");
    if (t < 0 || t > d.episodes[static_cast<std::size_t>(e)].length()) throw py::index_error("step out of range");
    idx.push_back({e, t});
  }
  return observation_batch<float>(d, idx, 0);
}

py::dict hits_dict(const EvalReport& r) {
  py::dict out;
  for (std::size_t i = 0; i < r.horizons.size(); ++i) out[py::int_(r.horizons[i])] = r.hits[i];
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Slot-based world models with reusable mechanisms";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("env", [](const Dataset& d) { return std::string(env_name(d.header.env)); })
      .def_property_readonly("split", [](const Dataset& d) { return std::string(split_name(d.header.split)); })
      .def_property_readonly("object_count", [](const Dataset& d) { return d.header.object_count; })
      .def_property_readonly("episode_length", [](const Dataset& d) { return d.header.episode_length; })
      .def("__len__", [](const Dataset& d) { return d.episodes.size(); })
      .def("frames", &episode_frames, py::arg("episode"), "uint8 frames of one episode, shape (T', 50, 50, 3)")
      .def("actions", &episode_actions, py::arg("episode"), "(object_id, direction) per step")
      .def("observations", &observations, py::arg("items"), "model inputs for (episode, step) pairs")
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(d, p); }, py::arg("path"));

  m.def(
      "generate_dataset",
      [](const std::string& env, const std::string& split, int count, int length, std::uint64_t seed) {
        py::gil_scoped_release release;
        return generate_dataset(parse_env(env), parse_split(split), count, length, seed);
      },
      py::arg("env"), py::arg("split"), py::arg("count"), py::arg("length") = kDefaultEpisodeLength,
      py::arg("seed") = 1);
  m.def("load_dataset", [](const std::filesystem::path& p) { return load_dataset(p); }, py::arg("path"));

  m.def(
      "default_config", [](const std::string& env) { return serialize_config(default_config(parse_env(env))); },
      py::arg("env") = "shapes", "default configuration as key = value text");
  m.def(
      "make_config",
      [](const std::string& env, const std::map<std::string, std::string>& overrides) {
        RunConfig c = default_config(parse_env(env));
        for (const auto& [k, v] : overrides) set_config_value(c, k, v);
        c.validate();
        return serialize_config(c);
      },
      py::arg("env") = "shapes", py::arg("overrides") = std::map<std::string, std::string>{});

  py::class_<model::WorldModel>(m, "WorldModel")
      .def_property_readonly("config", [](const model::WorldModel& w) { return serialize_config(w.config); })
      .def_property_readonly("parameter_count", [](const model::WorldModel& w) { return w.store.parameter_count(); })
      .def(
          "encode",
          [](const model::WorldModel& w, const RowMatrix& obs) {
            py::gil_scoped_release release;
            return RowMatrix(w.encoder.forward(obs));
          },
          py::arg("observations"), "rows of CHW observations -> rows of N * d_s slot values")
      .def(
          "feature_maps",
          [](const model::WorldModel& w, const RowMatrix& obs) {
            py::gil_scoped_release release;
            return RowMatrix(w.encoder.feature_maps(obs));
          },
          py::arg("observations"), "rows of CHW observations -> rows of N * 100 object mask values")
      .def(
          "step",
          [](const model::WorldModel& w, const RowMatrix& slots, const RowMatrix& actions, const std::vector<int>& order) {
            Rng rng(0);
            auto out = w.transition.step(slots, actions, order, {}, rng);
            return py::make_tuple(RowMatrix(out.next), out.selection);
          },
          py::arg("slots"), py::arg("actions"), py::arg("order"), "one inference step; returns (next, selection)")
      .def("save", [](const model::WorldModel& w, const std::filesystem::path& p) {
        nn::save_checkpoint(model::make_checkpoint(w.config, w.store), p);
      });

  m.def("load_world_model", [](const std::filesystem::path& p) { return model::load_world_model(p); }, py::arg("path"));
  m.def(
      "train_world_model",
      [](const Dataset& d, const std::string& config) {
        const RunConfig c = parse_config(config);
        std::vector<double> losses;
        model::WorldModel w = [&] {
          py::gil_scoped_release release;
          TrainReport report;
          auto out = train_world_model(d, c, {}, &report);
          losses = report.epoch_loss;
          return out;
        }();
        return py::make_tuple(std::move(w), losses);
      },
      py::arg("dataset"), py::arg("config"), "returns (world model, per-epoch losses)");

  m.def(
      "evaluate",
      [](const model::WorldModel& w, const Dataset& d, const std::vector<int>& horizons, const std::string& override_,
         bool random_mechanism, std::uint64_t seed) {
        EvalOptions opt;
        opt.horizons = horizons;
        opt.seed = seed;
        if (override_ == "identity") opt.override_transition = TransitionOverride::identity;
        else if (override_ == "oracle") opt.override_transition = TransitionOverride::oracle;
        else if (override_ != "none") throw ValidationError("override must be none, identity or oracle");
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = random_mechanism ? random_mech_eval(w, d, opt) : eval_rollout(w, d, opt);
        }
        return hits_dict(r);
      },
      py::arg("world"), py::arg("dataset"), py::arg("horizons") = std::vector<int>{1, 5, 10},
      py::arg("override") = "none", py::arg("random_mechanism") = false, py::arg("seed") = 1,
      "H@1 in percent per horizon");

  m.def(
      "contrastive_loss",
      [](const nn::Matrix<double>& pred, const nn::Matrix<double>& target, const nn::Matrix<double>& negative,
         double gamma) {
        if (pred.rows() != target.rows() || pred.cols() != target.cols() || negative.rows() != target.rows() ||
            negative.cols() != target.cols()) {
          throw ValidationError("contrastive_loss inputs must share one shape");
        }
        return contrastive_loss<double>(pred, target, negative, gamma, false).loss;
      },
      py::arg("pred"), py::arg("target"), py::arg("negative"), py::arg("gamma") = 1.0);
}
