// Command-line driver for the categorical latent-subspace pipeline:
// toy data -> GPCA fit -> flow-matching training -> sampling -> metrics.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "gpcaflow/datasets.hpp"
#include "gpcaflow/eval.hpp"
#include "gpcaflow/flowmatch.hpp"
#include "gpcaflow/gpca.hpp"
#include "gpcaflow/nn.hpp"
#include "gpcaflow/sampler.hpp"

namespace {

using namespace gpcaflow;

// Deterministic key=value record of the effective options of a run,
// written next to the command's primary output.
class Manifest {
 public:
  explicit Manifest(std::string command) { set("command", std::move(command)); }

  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    entries_[key] = os.str();
  }

  void write(const std::filesystem::path& primary_output) const {
    const auto path = primary_output.string() + ".manifest";
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path);
    for (const auto& [key, value] : entries_) {
      out << key << '=' << value << '\n';
    }
  }

 private:
  std::map<std::string, std::string> entries_;
};

struct GpcaFlags {
  long max_steps = 30000;
  double epsilon = std::numeric_limits<double>::infinity();
  double alpha = 0.02;
  double lr_v = 1e-3;
  double lr_z = 1e-2;
  long batch_size = 1024;
  long check_every = 5;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--max-steps", max_steps, "optimizer step budget");
    cmd->add_option("--epsilon", epsilon,
                    "early-stop distance gate against smoothed targets");
    cmd->add_option("--alpha", alpha, "label smoothing for the targets");
    cmd->add_option("--lr-v", lr_v, "Adam learning rate for the basis");
    cmd->add_option("--lr-z", lr_z, "Adam learning rate for the coefficients");
    cmd->add_option("--batch-size", batch_size,
                    "coefficient mini-batch size for large datasets");
    cmd->add_option("--check-every", check_every,
                    "rounds between stop-criterion checks");
    cmd->add_option("--seed", seed, "random seed");
  }

  gpca::GpcaConfig config() const {
    gpca::GpcaConfig cfg;
    cfg.max_steps = max_steps;
    cfg.epsilon = epsilon;
    cfg.alpha = alpha;
    cfg.lr_v = lr_v;
    cfg.lr_z = lr_z;
    cfg.batch_size = batch_size;
    cfg.check_every_rounds = check_every;
    cfg.seed = seed;
    return cfg;
  }

  void record(Manifest& manifest) const {
    manifest.set("max-steps", max_steps);
    manifest.set("epsilon", epsilon);
    manifest.set("alpha", alpha);
    manifest.set("lr-v", lr_v);
    manifest.set("lr-z", lr_z);
    manifest.set("batch-size", batch_size);
    manifest.set("check-every", check_every);
    manifest.set("seed", seed);
  }
};

// Flat key=value config files with # comments. Values apply only to
// options not already given on the command line, so flags win.
void apply_flat_config(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  const auto trim = [](std::string s) {
    const auto* ws = " \t\r";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
  };
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": invalid key");
    }
    auto* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unknown option \"" + key + "\"");
    }
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int run(int argc, char** argv) {
  CLI::App app{"generative modeling of discrete data via latent subspaces "
               "in natural-parameter space"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads,
                 "worker threads for linear algebra (default 1, deterministic)");
  app.immediate_callback();
  app.callback([&] { Eigen::setNbThreads(threads); });

  // ---- toy-make ------------------------------------------------------
  auto* toy = app.add_subcommand("toy-make", "sample a 2-variable toy dataset");
  std::string toy_kind = "pinwheel";
  long toy_n = 10000;
  long toy_c = 92;
  std::uint64_t toy_seed = 0;
  std::string toy_out;
  toy->add_option("--kind", toy_kind,
                  "gaussian-mixture | pinwheel | two-moons");
  toy->add_option("--n-samples", toy_n, "number of samples")
      ->check(CLI::PositiveNumber);
  toy->add_option("--categories", toy_c, "grid resolution per axis")
      ->check(CLI::Range(2l, 1000000l));
  toy->add_option("--seed", toy_seed, "random seed");
  toy->add_option("--out", toy_out, "output dataset path")->required();
  toy->callback([&] {
    datasets::ToySpec spec;
    spec.kind = datasets::toy_kind_from_string(toy_kind);
    spec.N = toy_n;
    spec.c = toy_c;
    spec.seed = toy_seed;
    const auto data = datasets::make_toy(spec);
    datasets::save_text(data, toy_out);
    Manifest manifest("toy-make");
    manifest.set("kind", toy_kind);
    manifest.set("n-samples", toy_n);
    manifest.set("categories", toy_c);
    manifest.set("seed", toy_seed);
    manifest.set("out", toy_out);
    manifest.write(toy_out);
    std::cout << "n=" << data.n << " c=" << data.c << " N=" << data.N << "\n";
  });

  // ---- gpca-fit ------------------------------------------------------
  auto* fit = app.add_subcommand("gpca-fit", "fit the latent subspace");
  std::string fit_config_file;
  fit->add_option("--config", fit_config_file, "flat key=value config file");
  std::string fit_data, fit_out_model, fit_out_report;
  long fit_dim = 16;
  bool require_epsilon = false;
  GpcaFlags fit_flags;
  fit->add_option("--data", fit_data, "training dataset (native text format)")
      ->required();
  fit->add_option("--dim", fit_dim, "latent dimension")->required();
  fit_flags.attach(fit);
  fit->add_flag("--require-epsilon", require_epsilon,
                "exit nonzero unless the epsilon criterion is met");
  fit->add_option("--out-model", fit_out_model, "output GPCA archive")
      ->required();
  fit->add_option("--out-report", fit_out_report, "output CSV report");
  fit->callback([&] {
    if (!fit_config_file.empty()) apply_flat_config(fit, fit_config_file);
    const auto data = datasets::load_text(fit_data);
    if (fit_dim < 1 || fit_dim > data.n * (data.c - 1)) {
      throw UsageError("--dim must be in [1, " +
                       std::to_string(data.n * (data.c - 1)) +
                       "] for this dataset");
    }
    auto [model, report] = gpca::fit(data, fit_dim, fit_flags.config());
    gpca::save_model(model, fit_out_model);
    if (!fit_out_report.empty()) {
      gpca::write_report_csv(report, fit_out_report);
    }
    Manifest manifest("gpca-fit");
    manifest.set("data", fit_data);
    manifest.set("dim", fit_dim);
    manifest.set("require-epsilon", require_epsilon ? 1 : 0);
    manifest.set("out-model", fit_out_model);
    manifest.set("out-report", fit_out_report);
    fit_flags.record(manifest);
    manifest.write(fit_out_model);
    std::cout << "steps=" << report.steps_run
              << " hamming=" << report.final_hamming
              << " max-e-distance=" << report.final_max_e_distance << "\n";
    if (require_epsilon &&
        !(report.final_hamming == 0 &&
          report.final_max_e_distance <= fit_flags.epsilon)) {
      throw NumericError("epsilon criterion not met: hamming=" +
                         std::to_string(report.final_hamming) +
                         " max-e-distance=" +
                         std::to_string(report.final_max_e_distance));
    }
  });

  // ---- fm-train ------------------------------------------------------
  auto* fm = app.add_subcommand("fm-train",
                                "train the latent flow-matching field");
  std::string fm_config_file;
  fm->add_option("--config", fm_config_file, "flat key=value config file");
  std::string fm_model, fm_out_net, fm_out_trace;
  long fm_steps = 20000;
  long fm_batch = 256;
  double fm_lr = 1e-3;
  std::vector<int> fm_hidden = {256, 256, 256};
  std::string fm_activation = "tanh";
  int fm_time_freqs = 16;
  double fm_time_freq_max = 1000.0;
  std::uint64_t fm_seed = 0;
  long fm_trace_every = 100;
  fm->add_option("--model", fm_model, "GPCA archive")->required();
  fm->add_option("--steps", fm_steps, "training steps");
  fm->add_option("--batch", fm_batch, "batch size");
  fm->add_option("--lr", fm_lr, "Adam learning rate");
  fm->add_option("--hidden", fm_hidden, "hidden layer widths")
      ->delimiter(',');
  fm->add_option("--activation", fm_activation, "tanh | gelu");
  fm->add_option("--time-freqs", fm_time_freqs,
                 "sinusoidal time-embedding frequencies");
  fm->add_option("--time-freq-max", fm_time_freq_max,
                 "highest time-embedding frequency");
  fm->add_option("--seed", fm_seed, "random seed");
  fm->add_option("--trace-every", fm_trace_every, "loss trace cadence");
  fm->add_option("--out-net", fm_out_net, "output MLP checkpoint")->required();
  fm->add_option("--out-trace", fm_out_trace, "output loss trace CSV");
  fm->callback([&] {
    if (!fm_config_file.empty()) apply_flat_config(fm, fm_config_file);
    auto latent = gpca::load_model(fm_model);
    nn::MlpConfig net_cfg;
    net_cfg.hidden = fm_hidden;
    net_cfg.activation = nn::activation_from_string(fm_activation);
    net_cfg.time_frequencies = fm_time_freqs;
    net_cfg.time_freq_max = fm_time_freq_max;
    auto model = flowmatch::make_flow_model(std::move(latent), net_cfg,
                                            fm_seed);
    flowmatch::CouplingSampler sampler(model.latent.Z, fm_seed + 1);
    flowmatch::FmConfig fm_cfg;
    fm_cfg.steps = fm_steps;
    fm_cfg.batch = fm_batch;
    fm_cfg.adam.lr = fm_lr;
    fm_cfg.seed = fm_seed;
    fm_cfg.trace_every = fm_trace_every;
    const auto trace = flowmatch::train(model, sampler, fm_cfg);
    model.net.save(fm_out_net);
    if (!fm_out_trace.empty()) {
      std::ofstream out(fm_out_trace);
      if (!out) throw DataError("cannot open " + fm_out_trace);
      out << "step,loss\n";
      out.precision(17);
      for (const auto& row : trace) {
        out << row.step << ',' << row.loss << '\n';
      }
    }
    Manifest manifest("fm-train");
    manifest.set("model", fm_model);
    manifest.set("steps", fm_steps);
    manifest.set("batch", fm_batch);
    manifest.set("lr", fm_lr);
    {
      std::string joined;
      for (std::size_t i = 0; i < fm_hidden.size(); ++i) {
        if (i) joined += ',';
        joined += std::to_string(fm_hidden[i]);
      }
      manifest.set("hidden", joined);
    }
    manifest.set("activation", fm_activation);
    manifest.set("time-freqs", fm_time_freqs);
    manifest.set("time-freq-max", fm_time_freq_max);
    manifest.set("seed", fm_seed);
    manifest.set("trace-every", fm_trace_every);
    manifest.set("out-net", fm_out_net);
    manifest.set("out-trace", fm_out_trace);
    manifest.write(fm_out_net);
    std::cout << "steps=" << fm_steps << " final-loss="
              << (trace.empty() ? 0.0 : trace.back().loss) << "\n";
  });

  // ---- sample --------------------------------------------------------
  auto* smp = app.add_subcommand("sample",
                                 "generate discrete samples from a model");
  std::string smp_config_file;
  smp->add_option("--config", smp_config_file, "flat key=value config file");
  std::string smp_model, smp_net, smp_out, smp_method = "rk4";
  std::string smp_trajectories;
  long smp_count = 10000;
  long smp_steps = 100;
  std::uint64_t smp_seed = 0;
  smp->add_option("--model", smp_model, "GPCA archive")->required();
  smp->add_option("--net", smp_net, "MLP checkpoint")->required();
  smp->add_option("--count", smp_count, "number of samples")
      ->check(CLI::NonNegativeNumber);
  smp->add_option("--steps", smp_steps, "integration steps")
      ->check(CLI::PositiveNumber);
  smp->add_option("--seed", smp_seed, "random seed");
  smp->add_option("--method", smp_method, "euler | rk4");
  smp->add_option("--out", smp_out, "output dataset path")->required();
  smp->add_option("--out-trajectories", smp_trajectories,
                  "optional per-sample trajectory CSV");
  smp->callback([&] {
    if (!smp_config_file.empty()) apply_flat_config(smp, smp_config_file);
    auto latent = gpca::load_model(smp_model);
    auto net = nn::Mlp::load(smp_net);
    if (net.latent_dim() != latent.d) {
      throw DataError("sample: net dimension " +
                      std::to_string(net.latent_dim()) +
                      " does not match model dimension " +
                      std::to_string(latent.d));
    }
    flowmatch::FlowModel model{std::move(latent), std::move(net)};
    const auto method = sampler::method_from_string(smp_method);
    const auto result =
        sampler::generate(model, smp_count, smp_steps, smp_seed, method);
    datasets::save_text(result.data, smp_out);
    if (!smp_trajectories.empty() && smp_count > 0) {
      // Re-integrate with trajectory capture (identical states: the
      // integrator is deterministic).
      Rng rng(smp_seed);
      Eigen::MatrixXd z0 = rng.normal_matrix(smp_count, model.latent.d);
      std::vector<Eigen::MatrixXd> steps_states;
      sampler::integrate_batch(model, std::move(z0), smp_steps, method,
                               &steps_states);
      std::ofstream out(smp_trajectories);
      if (!out) throw DataError("cannot open " + smp_trajectories);
      out << "sample,step";
      for (Eigen::Index k = 0; k < model.latent.d; ++k) out << ",z" << k;
      out << "\n";
      out.precision(17);
      for (Eigen::Index i = 0; i < smp_count; ++i) {
        for (std::size_t s = 0; s < steps_states.size(); ++s) {
          out << i << ',' << s;
          for (Eigen::Index k = 0; k < model.latent.d; ++k) {
            out << ',' << steps_states[s](i, k);
          }
          out << '\n';
        }
      }
    }
    Manifest manifest("sample");
    manifest.set("model", smp_model);
    manifest.set("net", smp_net);
    manifest.set("count", smp_count);
    manifest.set("steps", smp_steps);
    manifest.set("seed", smp_seed);
    manifest.set("method", smp_method);
    manifest.set("out", smp_out);
    manifest.set("out-trajectories", smp_trajectories);
    manifest.write(smp_out);
    std::cout << "generated=" << result.data.N << "\n";
  });

  // ---- reconstruct ---------------------------------------------------
  auto* rec = app.add_subcommand(
      "reconstruct", "encode a dataset with a fixed basis and round");
  std::string rec_config_file;
  rec->add_option("--config", rec_config_file, "flat key=value config file");
  std::string rec_model, rec_data, rec_out;
  GpcaFlags rec_flags;
  rec->add_option("--model", rec_model, "GPCA archive")->required();
  rec->add_option("--data", rec_data, "dataset to encode")->required();
  rec_flags.attach(rec);
  rec->add_option("--out", rec_out, "output reconstruction dataset")
      ->required();
  rec->callback([&] {
    if (!rec_config_file.empty()) apply_flat_config(rec, rec_config_file);
    const auto model = gpca::load_model(rec_model);
    const auto data = datasets::load_text(rec_data);
    auto [z, report] =
        gpca::encode_with_fixed_basis(model, data, rec_flags.config());
    OneHotDataset recon = OneHotDataset::empty(data.n, data.c);
    recon.N = data.N;
    recon.indices.resize(static_cast<std::size_t>(data.N * data.n));
    for (Eigen::Index i = 0; i < data.N; ++i) {
      const auto labels = gpca::round_labels(geometry::unvectorize_rows(
          model.V * z.row(i).transpose(), model.n, model.c - 1));
      for (Eigen::Index j = 0; j < data.n; ++j) {
        recon(i, j) = labels[static_cast<std::size_t>(j)];
      }
    }
    datasets::save_text(recon, rec_out);
    Manifest manifest("reconstruct");
    manifest.set("model", rec_model);
    manifest.set("data", rec_data);
    manifest.set("out", rec_out);
    rec_flags.record(manifest);
    manifest.write(rec_out);
    const double normalized =
        static_cast<double>(report.final_hamming) /
        static_cast<double>(std::max<Eigen::Index>(1, data.N * data.n));
    std::cout << "hamming=" << report.final_hamming
              << " normalized=" << normalized << "\n";
  });

  // ---- eval ----------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "evaluation metrics");
  ev->require_subcommand(1);

  auto* hist = ev->add_subcommand("hist", "joint histogram of an n=2 dataset");
  std::string hist_data, hist_csv, hist_pgm;
  hist->add_option("--data", hist_data, "dataset")->required();
  hist->add_option("--out-csv", hist_csv, "histogram CSV");
  hist->add_option("--out-pgm", hist_pgm, "histogram PGM image");
  hist->callback([&] {
    const auto h = eval::joint_histogram(datasets::load_text(hist_data));
    if (!hist_csv.empty()) eval::write_histogram_csv(h, hist_csv);
    if (!hist_pgm.empty()) eval::write_histogram_pgm(h, hist_pgm);
    if (!hist_csv.empty()) {
      Manifest manifest("eval-hist");
      manifest.set("data", hist_data);
      manifest.set("out-csv", hist_csv);
      manifest.set("out-pgm", hist_pgm);
      manifest.write(hist_csv);
    }
    std::cout << "total=" << h.sum() << " peak=" << h.maxCoeff() << "\n";
  });

  auto* tv = ev->add_subcommand("tv", "total variation between two datasets");
  std::string tv_a, tv_b;
  tv->add_option("--data-a", tv_a, "first dataset")->required();
  tv->add_option("--data-b", tv_b, "second dataset")->required();
  tv->callback([&] {
    const auto ha = eval::joint_histogram(datasets::load_text(tv_a));
    const auto hb = eval::joint_histogram(datasets::load_text(tv_b));
    std::cout.precision(17);
    std::cout << "tv=" << eval::tv_distance(ha, hb) << "\n";
  });

  auto* near = ev->add_subcommand(
      "nearest", "k nearest training samples by Hamming distance");
  std::string near_data, near_query;
  long near_row = 0;
  long near_k = 5;
  near->add_option("--data", near_data, "training dataset")->required();
  near->add_option("--query", near_query, "query dataset")->required();
  near->add_option("--row", near_row, "query row index");
  near->add_option("--k", near_k, "neighbor count")->check(CLI::PositiveNumber);
  near->callback([&] {
    const auto data = datasets::load_text(near_data);
    const auto query = datasets::load_text(near_query);
    if (near_row < 0 || near_row >= query.N) {
      throw UsageError("--row out of range for the query dataset");
    }
    const auto neighbors = eval::nearest_training(
        std::span<const std::int32_t>(query.row(near_row), query.n), data,
        near_k);
    for (const auto& nb : neighbors) {
      std::cout << nb.index << ' ' << nb.distance << "\n";
    }
  });

  auto* curve = ev->add_subcommand(
      "hamming-curve", "reconstruction error across latent dimensions");
  std::string curve_config_file;
  curve->add_option("--config", curve_config_file, "flat key=value config file");
  std::string curve_data, curve_out;
  std::vector<long> curve_dims = {2, 4, 8, 16};
  GpcaFlags curve_flags;
  curve->add_option("--data", curve_data, "dataset")->required();
  curve->add_option("--dims", curve_dims, "latent dimensions, ascending")
      ->delimiter(',');
  curve_flags.attach(curve);
  curve->add_option("--out", curve_out, "output CSV")->required();
  curve->callback([&] {
    if (!curve_config_file.empty()) apply_flat_config(curve, curve_config_file);
    const auto data = datasets::load_text(curve_data);
    std::vector<Eigen::Index> dims(curve_dims.begin(), curve_dims.end());
    const auto rows = eval::hamming_curve(data, dims, curve_flags.config());
    eval::write_curve_csv(rows, curve_out);
    Manifest manifest("eval-hamming-curve");
    manifest.set("data", curve_data);
    {
      std::string joined;
      for (std::size_t i = 0; i < curve_dims.size(); ++i) {
        if (i) joined += ',';
        joined += std::to_string(curve_dims[i]);
      }
      manifest.set("dims", joined);
    }
    curve_flags.record(manifest);
    manifest.set("out", curve_out);
    manifest.write(curve_out);
    for (const auto& row : rows) {
      std::cout << "d=" << row.d << " total=" << row.total << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
