// End-to-end checks of the command-line tool: exit codes, file
// contracts, and byte-identical reruns. The binary path arrives as
// argv[1] from ctest.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_support.hpp"

namespace {

std::string g_cli;

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string capture_cli(const std::string& args,
                        const std::filesystem::path& tmp_out) {
  const std::string cmd =
      g_cli + " " + args + " > " + tmp_out.string() + " 2>/dev/null";
  std::system(cmd.c_str());
  std::ifstream in(tmp_out);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("toy-make: header, determinism, rejection of empty requests") {
  gpcaflow::testing::TempDir tmp("cli_toy");
  const auto out = tmp.path("toy.txt");
  const std::string base = "toy-make --kind pinwheel --n-samples 400 "
                           "--categories 92 --seed 3 --out " +
                           out.string();
  CHECK(run_cli(base) == 0);
  {
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "2 92 400");
  }
  const std::string first = slurp(out);
  CHECK(run_cli(base) == 0);
  CHECK(slurp(out) == first);  // identical bytes under the same seed

  CHECK(std::filesystem::exists(out.string() + ".manifest"));

  CHECK(run_cli("toy-make --kind pinwheel --n-samples 0 --categories 92 "
                "--seed 1 --out " +
                tmp.path("zero.txt").string()) == 1);
  CHECK(run_cli("toy-make --kind nonsense --n-samples 5 --categories 92 "
                "--seed 1 --out " +
                tmp.path("bad.txt").string()) == 2);
}

TEST_CASE("gpca-fit: report contract, dim validation, reproducibility") {
  gpcaflow::testing::TempDir tmp("cli_fit");
  const auto data = tmp.path("toy.txt");
  REQUIRE(run_cli("toy-make --kind two-moons --n-samples 300 --categories 10 "
                  "--seed 5 --out " +
                  data.string()) == 0);

  const auto model = tmp.path("m.gpca");
  const auto report = tmp.path("r.csv");
  const std::string fit_cmd =
      "gpca-fit --data " + data.string() + " --dim 6 --max-steps 1500 " +
      "--seed 7 --out-model " + model.string() + " --out-report " +
      report.string();
  CHECK(run_cli(fit_cmd) == 0);
  CHECK(std::filesystem::exists(model));
  {
    std::ifstream in(report);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,loss,hamming");
  }
  const std::string model_bytes = slurp(model);
  const std::string report_bytes = slurp(report);
  CHECK(run_cli(fit_cmd) == 0);
  CHECK(slurp(model) == model_bytes);
  CHECK(slurp(report) == report_bytes);

  // Latent dimension beyond n(c-1) = 18 is a usage error.
  CHECK(run_cli("gpca-fit --data " + data.string() +
                " --dim 19 --out-model " + tmp.path("x.gpca").string()) == 1);
  // Missing dataset is a data error.
  CHECK(run_cli("gpca-fit --data " + tmp.path("absent.txt").string() +
                " --dim 2 --out-model " + tmp.path("y.gpca").string()) == 2);
}

TEST_CASE("gpca-fit --require-epsilon gates the exit code") {
  gpcaflow::testing::TempDir tmp("cli_eps");
  const auto data = tmp.path("toy.txt");
  REQUIRE(run_cli("toy-make --kind two-moons --n-samples 120 --categories 6 "
                  "--seed 37 --out " +
                  data.string()) == 0);
  const std::string base = "gpca-fit --data " + data.string() +
                           " --dim 10 --max-steps 4000 --seed 39 ";
  // Full rank reaches zero Hamming error; a generous epsilon passes.
  CHECK(run_cli(base + "--epsilon 1000 --require-epsilon --out-model " +
                tmp.path("ok.gpca").string()) == 0);
  // An unreachable epsilon is a numerical failure.
  CHECK(run_cli(base + "--epsilon 1e-6 --require-epsilon --out-model " +
                tmp.path("bad.gpca").string()) == 3);
}

TEST_CASE("full pipeline: train, sample, evaluate, reconstruct") {
  gpcaflow::testing::TempDir tmp("cli_pipe");
  const auto data = tmp.path("toy.txt");
  REQUIRE(run_cli("toy-make --kind gaussian-mixture --n-samples 400 "
                  "--categories 12 --seed 11 --out " +
                  data.string()) == 0);

  const auto model = tmp.path("m.gpca");
  REQUIRE(run_cli("gpca-fit --data " + data.string() +
                  " --dim 8 --max-steps 2000 --seed 13 --out-model " +
                  model.string()) == 0);

  const auto net = tmp.path("net.mlp");
  const auto trace = tmp.path("trace.csv");
  REQUIRE(run_cli("fm-train --model " + model.string() +
                  " --steps 400 --batch 64 --hidden 32,32 --seed 17 "
                  "--out-net " +
                  net.string() + " --out-trace " + trace.string()) == 0);
  {
    std::ifstream in(trace);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,loss");
  }

  const auto samples = tmp.path("samples.txt");
  const std::string sample_cmd = "sample --model " + model.string() +
                                 " --net " + net.string() +
                                 " --count 200 --steps 20 --seed 19 --out " +
                                 samples.string();
  REQUIRE(run_cli(sample_cmd) == 0);
  const std::string sample_bytes = slurp(samples);
  REQUIRE(run_cli(sample_cmd) == 0);
  CHECK(slurp(samples) == sample_bytes);

  // count = 0 still writes a valid header.
  const auto empty = tmp.path("empty.txt");
  CHECK(run_cli("sample --model " + model.string() + " --net " + net.string() +
                " --count 0 --steps 20 --seed 19 --out " + empty.string()) ==
        0);
  {
    std::ifstream in(empty);
    std::string header;
    std::getline(in, header);
    CHECK(header == "2 12 0");
  }

  // TV between generated and training data is a value in [0, 1].
  const std::string tv_out =
      capture_cli("eval tv --data-a " + data.string() + " --data-b " +
                      samples.string(),
                  tmp.path("tv.txt"));
  REQUIRE(tv_out.substr(0, 3) == "tv=");
  const double tv = std::stod(tv_out.substr(3));
  CHECK(tv >= 0.0);
  CHECK(tv <= 1.0);

  // nearest returns exactly k rows.
  const std::string near_out =
      capture_cli("eval nearest --data " + data.string() + " --query " +
                      samples.string() + " --row 0 --k 5",
                  tmp.path("near.txt"));
  CHECK(std::count(near_out.begin(), near_out.end(), '\n') == 5);

  // Histogram emission.
  CHECK(run_cli("eval hist --data " + samples.string() + " --out-csv " +
                tmp.path("h.csv").string() + " --out-pgm " +
                tmp.path("h.pgm").string()) == 0);
  CHECK(std::filesystem::exists(tmp.path("h.csv")));
  CHECK(std::filesystem::exists(tmp.path("h.pgm")));

  // Reconstruction through the fixed basis.
  const auto recon = tmp.path("recon.txt");
  CHECK(run_cli("reconstruct --model " + model.string() + " --data " +
                data.string() + " --max-steps 600 --out " + recon.string()) ==
        0);
  {
    std::ifstream in(recon);
    std::string header;
    std::getline(in, header);
    CHECK(header == "2 12 400");
  }
}

TEST_CASE("hamming-curve subcommand emits the CSV") {
  gpcaflow::testing::TempDir tmp("cli_curve");
  const auto data = tmp.path("toy.txt");
  REQUIRE(run_cli("toy-make --kind two-moons --n-samples 150 --categories 8 "
                  "--seed 23 --out " +
                  data.string()) == 0);
  const auto out = tmp.path("curve.csv");
  CHECK(run_cli("eval hamming-curve --data " + data.string() +
                " --dims 2,4,8 --max-steps 500 --seed 29 --out " +
                out.string()) == 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header == "d,total_error,min_error,max_error");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 3);
}

TEST_CASE("config file values are applied and flags win") {
  gpcaflow::testing::TempDir tmp("cli_cfg");
  const auto data = tmp.path("toy.txt");
  REQUIRE(run_cli("toy-make --kind two-moons --n-samples 100 --categories 6 "
                  "--seed 31 --out " +
                  data.string()) == 0);

  const auto cfg = tmp.path("fit.cfg");
  {
    std::ofstream out(cfg);
    out << "# gpca options\n";
    out << "max-steps=200\n";
    out << "seed=41\n";
  }
  const auto model_a = tmp.path("a.gpca");
  REQUIRE(run_cli("gpca-fit --data " + data.string() + " --dim 4 --config " +
                  cfg.string() + " --out-model " + model_a.string()) == 0);
  // Same settings given explicitly produce the same archive bytes.
  const auto model_b = tmp.path("b.gpca");
  REQUIRE(run_cli("gpca-fit --data " + data.string() +
                  " --dim 4 --max-steps 200 --seed 41 --out-model " +
                  model_b.string()) == 0);
  CHECK(slurp(model_a) == slurp(model_b));

  // A flag overrides the config file value.
  const auto model_c = tmp.path("c.gpca");
  REQUIRE(run_cli("gpca-fit --data " + data.string() + " --dim 4 --config " +
                  cfg.string() + " --seed 43 --out-model " +
                  model_c.string()) == 0);
  CHECK(slurp(model_c) != slurp(model_a));
}

int main(int argc, char** argv) {
  doctest::Context context;
  if (argc > 1 && argv[1][0] != '-') {
    g_cli = argv[1];
    context.applyCommandLine(argc - 1, argv + 1);
  } else {
    const char* env = std::getenv("GPCAFLOW_CLI");
    if (env) g_cli = env;
    context.applyCommandLine(argc, argv);
  }
  if (g_cli.empty()) {
    std::fprintf(stderr, "usage: gpcaflow_cli_tests <path-to-gpcaflow>\n");
    return 1;
  }
  return context.run();
}
