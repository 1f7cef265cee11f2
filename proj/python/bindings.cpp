// Python bindings for the core operations: charts and geodesics on the
// product simplex, GPCA fitting, flow-matching training, ODE sampling,
// and the evaluation metrics.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gpcaflow/datasets.hpp"
#include "gpcaflow/eval.hpp"
#include "gpcaflow/flowmatch.hpp"
#include "gpcaflow/geometry.hpp"
#include "gpcaflow/gpca.hpp"
#include "gpcaflow/nn.hpp"
#include "gpcaflow/sampler.hpp"

namespace py = pybind11;
using namespace gpcaflow;

namespace {

OneHotDataset dataset_from_numpy(
    const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>&
        indices,
    Eigen::Index c) {
  if (indices.ndim() != 2) {
    throw DataError("indices must be a 2-D array of shape (N, n)");
  }
  OneHotDataset data;
  data.N = static_cast<Eigen::Index>(indices.shape(0));
  data.n = static_cast<Eigen::Index>(indices.shape(1));
  data.c = c;
  const auto* ptr = indices.data();
  data.indices.assign(ptr, ptr + indices.size());
  data.validate();
  return data;
}

py::array_t<std::int32_t> dataset_to_numpy(const OneHotDataset& data) {
  py::array_t<std::int32_t> out({data.N, data.n});
  std::copy(data.indices.begin(), data.indices.end(), out.mutable_data());
  return out;
}

geometry::ProductSimplexPoint point_of(const Eigen::MatrixXd& probs) {
  return geometry::ProductSimplexPoint(probs);
}

nn::MlpConfig net_config_from_args(const std::vector<int>& hidden,
                                   const std::string& activation,
                                   int time_frequencies,
                                   double time_freq_max) {
  nn::MlpConfig cfg;
  cfg.hidden = hidden;
  cfg.activation = nn::activation_from_string(activation);
  cfg.time_frequencies = time_frequencies;
  cfg.time_freq_max = time_freq_max;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent-subspace generative modeling of discrete categorical "
            "data: natural-parameter charts, GPCA, flow matching, and "
            "ODE sampling.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  // ---- datasets ------------------------------------------------------
  py::class_<OneHotDataset>(m, "OneHotDataset")
      .def(py::init(&dataset_from_numpy), py::arg("indices"),
           py::arg("categories"))
      .def_readonly("n", &OneHotDataset::n)
      .def_readonly("c", &OneHotDataset::c)
      .def_readonly("N", &OneHotDataset::N)
      .def("to_numpy", &dataset_to_numpy)
      .def("__len__", [](const OneHotDataset& d) { return d.N; })
      .def("__repr__", [](const OneHotDataset& d) {
        return "<OneHotDataset n=" + std::to_string(d.n) +
               " c=" + std::to_string(d.c) + " N=" + std::to_string(d.N) + ">";
      });

  m.def(
      "make_toy",
      [](const std::string& kind, Eigen::Index n_samples, Eigen::Index c,
         std::uint64_t seed) {
        datasets::ToySpec spec;
        spec.kind = datasets::toy_kind_from_string(kind);
        spec.N = n_samples;
        spec.c = c;
        spec.seed = seed;
        return datasets::make_toy(spec);
      },
      py::arg("kind"), py::arg("n_samples") = 10000,
      py::arg("categories") = 92, py::arg("seed") = 0,
      "Sample a discretized 2-D toy dataset "
      "(gaussian-mixture | pinwheel | two-moons).");
  m.def("load_text", &datasets::load_text, py::arg("path"));
  m.def("save_text", &datasets::save_text, py::arg("data"), py::arg("path"));
  m.def("load_idx_images", &datasets::load_idx_images, py::arg("path"),
        py::arg("threshold") = 128, py::arg("pad_28_to_32") = false);
  m.def("load_sequences", &datasets::load_sequences, py::arg("path"),
        py::arg("alphabet") = "ACGT");
  m.def("save_sequences", &datasets::save_sequences, py::arg("data"),
        py::arg("path"), py::arg("alphabet") = "ACGT");

  // ---- geometry ------------------------------------------------------
  m.def(
      "encode",
      [](const Eigen::MatrixXd& probs) {
        return geometry::encode(point_of(probs)).theta();
      },
      py::arg("probs"),
      "Log-ratio natural parameters of row-wise categorical "
      "distributions; shape (n, c) -> (n, c-1).");
  m.def(
      "decode",
      [](const Eigen::MatrixXd& theta) {
        return geometry::decode(geometry::NaturalParams(theta)).probs();
      },
      py::arg("theta"),
      "Inverse chart; shape (n, c-1) -> (n, c), rows strictly positive.");
  m.def(
      "e_distance",
      [](const Eigen::MatrixXd& p0, const Eigen::MatrixXd& p1) {
        return geometry::e_distance(point_of(p0), point_of(p1));
      },
      py::arg("probs0"), py::arg("probs1"));
  m.def(
      "e_geodesic",
      [](const Eigen::MatrixXd& p0, const Eigen::MatrixXd& p1, double t) {
        return geometry::e_geodesic(point_of(p0), point_of(p1), t).probs();
      },
      py::arg("probs0"), py::arg("probs1"), py::arg("t"));
  m.def(
      "geodesic_velocity",
      [](const Eigen::MatrixXd& p0, const Eigen::MatrixXd& p1, double t) {
        return geometry::geodesic_velocity(point_of(p0), point_of(p1), t)
            .coords();
      },
      py::arg("probs0"), py::arg("probs1"), py::arg("t"));
  m.def(
      "e_norm",
      [](const Eigen::MatrixXd& probs, const Eigen::MatrixXd& tangent) {
        return geometry::e_norm(point_of(probs),
                                geometry::TangentVector(tangent));
      },
      py::arg("probs"), py::arg("tangent"));
  m.def(
      "push_tangent_to_theta",
      [](const Eigen::MatrixXd& probs, const Eigen::MatrixXd& tangent) {
        return geometry::push_tangent_to_theta(
            point_of(probs), geometry::TangentVector(tangent));
      },
      py::arg("probs"), py::arg("tangent"));
  m.def(
      "push_theta_to_tangent",
      [](const Eigen::MatrixXd& theta, const Eigen::MatrixXd& dtheta) {
        return geometry::push_theta_to_tangent(geometry::NaturalParams(theta),
                                               dtheta)
            .coords();
      },
      py::arg("theta"), py::arg("dtheta"));

  // ---- gpca ----------------------------------------------------------
  py::class_<gpca::GpcaConfig>(m, "GpcaConfig")
      .def(py::init<>())
      .def_readwrite("max_steps", &gpca::GpcaConfig::max_steps)
      .def_readwrite("epsilon", &gpca::GpcaConfig::epsilon)
      .def_readwrite("alpha", &gpca::GpcaConfig::alpha)
      .def_readwrite("lr_v", &gpca::GpcaConfig::lr_v)
      .def_readwrite("lr_z", &gpca::GpcaConfig::lr_z)
      .def_readwrite("batch_size", &gpca::GpcaConfig::batch_size)
      .def_readwrite("check_every_rounds", &gpca::GpcaConfig::check_every_rounds)
      .def_readwrite("seed", &gpca::GpcaConfig::seed);

  py::class_<gpca::FitReport>(m, "FitReport")
      .def_readonly("steps_run", &gpca::FitReport::steps_run)
      .def_readonly("final_hamming", &gpca::FitReport::final_hamming)
      .def_readonly("final_max_e_distance",
                    &gpca::FitReport::final_max_e_distance)
      .def_property_readonly("trace", [](const gpca::FitReport& r) {
        py::list rows;
        for (const auto& row : r.trace) {
          rows.append(py::make_tuple(row.step, row.loss, row.hamming));
        }
        return rows;
      });

  py::class_<gpca::LatentModel>(m, "LatentModel")
      .def_readonly("n", &gpca::LatentModel::n)
      .def_readonly("c", &gpca::LatentModel::c)
      .def_readonly("d", &gpca::LatentModel::d)
      .def_readonly("alpha", &gpca::LatentModel::alpha)
      .def_readonly("finalized", &gpca::LatentModel::finalized)
      .def_readonly("V", &gpca::LatentModel::V)
      .def_readonly("Z", &gpca::LatentModel::Z)
      .def("save", &gpca::save_model, py::arg("path"))
      .def_static("load", &gpca::load_model, py::arg("path"));

  m.def(
      "fit",
      [](const OneHotDataset& data, Eigen::Index d,
         const gpca::GpcaConfig& config) {
        return gpca::fit(data, d, config);
      },
      py::arg("data"), py::arg("d"), py::arg("config") = gpca::GpcaConfig{},
      "Alternating-Adam GPCA fit; returns (LatentModel, FitReport).");
  m.def(
      "encode_with_fixed_basis",
      [](const gpca::LatentModel& model, const OneHotDataset& data,
         const gpca::GpcaConfig& config) {
        return gpca::encode_with_fixed_basis(model, data, config);
      },
      py::arg("model"), py::arg("data"),
      py::arg("config") = gpca::GpcaConfig{});
  m.def(
      "reconstruct",
      [](const gpca::LatentModel& model, const Eigen::VectorXd& z) {
        auto rec = gpca::reconstruct(model, z);
        return py::make_tuple(rec.point.probs(), rec.labels);
      },
      py::arg("model"), py::arg("z"),
      "Decoded probabilities and rounded labels for one latent vector.");
  m.def("reconstruction_error", &gpca::reconstruction_error, py::arg("model"),
        py::arg("data"));
  m.def(
      "smooth_dataset",
      [](const OneHotDataset& data, double alpha) {
        return gpca::smooth_dataset(data, alpha).theta;
      },
      py::arg("data"), py::arg("alpha") = 0.02);

  // ---- flow matching -------------------------------------------------
  py::class_<flowmatch::FlowModel>(m, "FlowModel")
      .def_property_readonly(
          "latent",
          [](const flowmatch::FlowModel& model) { return model.latent; })
      .def(
          "velocity",
          [](const flowmatch::FlowModel& model, const Eigen::MatrixXd& z,
             const Eigen::VectorXd& t) { return model.net.forward(z, t); },
          py::arg("z"), py::arg("t"),
          "Evaluate the learned latent vector field on batch rows.")
      .def(
          "save_net",
          [](const flowmatch::FlowModel& model,
             const std::filesystem::path& path) { model.net.save(path); },
          py::arg("path"));

  m.def(
      "make_flow_model",
      [](const gpca::LatentModel& latent, const std::vector<int>& hidden,
         const std::string& activation, int time_frequencies,
         double time_freq_max, std::uint64_t seed) {
        return flowmatch::make_flow_model(
            latent,
            net_config_from_args(hidden, activation, time_frequencies,
                                 time_freq_max),
            seed);
      },
      py::arg("latent"), py::arg("hidden") = std::vector<int>{256, 256, 256},
      py::arg("activation") = "tanh", py::arg("time_frequencies") = 16,
      py::arg("time_freq_max") = 1000.0, py::arg("seed") = 0);
  m.def(
      "load_flow_model",
      [](const std::filesystem::path& model_path,
         const std::filesystem::path& net_path) {
        auto latent = gpca::load_model(model_path);
        auto net = nn::Mlp::load(net_path);
        if (net.latent_dim() != latent.d) {
          throw DataError("checkpoint dimension does not match the model");
        }
        return flowmatch::FlowModel{std::move(latent), std::move(net)};
      },
      py::arg("model_path"), py::arg("net_path"));
  m.def(
      "interpolant",
      [](const Eigen::VectorXd& z0, const Eigen::VectorXd& z1, double t) {
        const auto inter = flowmatch::interpolant(z0, z1, t);
        return py::make_tuple(inter.z_t, inter.velocity);
      },
      py::arg("z0"), py::arg("z1"), py::arg("t"));
  m.def(
      "cfm_loss",
      [](const flowmatch::FlowModel& model, const Eigen::MatrixXd& z0,
         const Eigen::MatrixXd& z1, const Eigen::VectorXd& t) {
        return flowmatch::cfm_loss(model.net, z0, z1, t);
      },
      py::arg("model"), py::arg("z0"), py::arg("z1"), py::arg("t"));
  m.def(
      "train",
      [](flowmatch::FlowModel& model, long steps, Eigen::Index batch,
         double lr, std::uint64_t seed, long trace_every,
         const std::string& source) {
        flowmatch::CouplingSampler sampler(
            model.latent.Z, seed + 1,
            source == "zero" ? flowmatch::SourceKind::Zero
                             : flowmatch::SourceKind::StandardNormal);
        flowmatch::FmConfig config;
        config.steps = steps;
        config.batch = batch;
        config.adam.lr = lr;
        config.seed = seed;
        config.trace_every = trace_every;
        const auto trace = flowmatch::train(model, sampler, config);
        py::list rows;
        for (const auto& row : trace) {
          rows.append(py::make_tuple(row.step, row.loss));
        }
        return rows;
      },
      py::arg("model"), py::arg("steps") = 20000, py::arg("batch") = 256,
      py::arg("lr") = 1e-3, py::arg("seed") = 0, py::arg("trace_every") = 100,
      py::arg("source") = "normal",
      "Conditional flow matching on the model's coefficients; returns "
      "the (step, loss) trace.");
  m.def(
      "subspace_error_budget",
      [](const Eigen::MatrixXd& full, const Eigen::MatrixXd& approx,
         double epsilon) {
        const auto report =
            flowmatch::subspace_error_budget(full, approx, epsilon);
        py::dict out;
        out["per_sample_sq_error"] = report.per_sample_sq_error;
        out["max_sq_error"] = report.max_sq_error;
        out["epsilon"] = report.epsilon;
        out["multiplier"] = report.multiplier;
        out["additive"] = report.additive;
        return out;
      },
      py::arg("full_thetas"), py::arg("approx_thetas"),
      py::arg("epsilon") = -1.0);

  // ---- sampling ------------------------------------------------------
  m.def(
      "integrate",
      [](const flowmatch::FlowModel& model, const Eigen::VectorXd& z0,
         long steps, const std::string& method) {
        const auto states = sampler::integrate(
            model, z0, steps, sampler::method_from_string(method));
        Eigen::MatrixXd out(static_cast<Eigen::Index>(states.size()),
                            z0.size());
        for (std::size_t i = 0; i < states.size(); ++i) {
          out.row(static_cast<Eigen::Index>(i)) = states[i].transpose();
        }
        return out;
      },
      py::arg("model"), py::arg("z0"), py::arg("steps") = 100,
      py::arg("method") = "rk4",
      "Trajectory of the latent ODE from t=0 to t=1, one state per row.");
  m.def(
      "generate",
      [](const flowmatch::FlowModel& model, Eigen::Index count, long steps,
         std::uint64_t seed, const std::string& method) {
        auto result = sampler::generate(model, count, steps, seed,
                                        sampler::method_from_string(method));
        return py::make_tuple(std::move(result.data),
                              std::move(result.z_final));
      },
      py::arg("model"), py::arg("count"), py::arg("steps") = 100,
      py::arg("seed") = 0, py::arg("method") = "rk4",
      "Discrete samples plus their latent endpoints.");

  // ---- evaluation ----------------------------------------------------
  m.def("joint_histogram", &eval::joint_histogram, py::arg("data"));
  m.def("tv_distance", &eval::tv_distance, py::arg("hist1"), py::arg("hist2"));
  m.def(
      "nearest_training",
      [](const std::vector<std::int32_t>& sample, const OneHotDataset& data,
         Eigen::Index k) {
        py::list rows;
        for (const auto& neighbor : eval::nearest_training(sample, data, k)) {
          rows.append(py::make_tuple(neighbor.index, neighbor.distance));
        }
        return rows;
      },
      py::arg("sample"), py::arg("data"), py::arg("k") = 5);
  m.def(
      "hamming_curve",
      [](const OneHotDataset& data, const std::vector<Eigen::Index>& dims,
         const gpca::GpcaConfig& config) {
        py::list rows;
        for (const auto& row : eval::hamming_curve(data, dims, config)) {
          rows.append(py::make_tuple(row.d, row.total, row.min_per_sample,
                                     row.max_per_sample));
        }
        return rows;
      },
      py::arg("data"), py::arg("dims"),
      py::arg("config") = gpca::GpcaConfig{});
}
