#include <doctest.h>

#include <fstream>
#include <vector>

#include "gpcaflow/datasets.hpp"
#include "test_support.hpp"

using namespace gpcaflow;
using namespace gpcaflow::datasets;
using gpcaflow::testing::TempDir;

namespace {

// Density-threshold connected components (8-connectivity) of the
// continuous samples binned to a c x c grid with 3x3 box smoothing.
// Oracle for the arm structure of the pinwheel before discretization.
int populated_components(const Eigen::MatrixXd& points, Eigen::Index c,
                         double threshold_per_cell) {
  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(c, c);
  const auto big_n = points.rows();
  for (Eigen::Index i = 0; i < big_n; ++i) {
    auto bx = static_cast<Eigen::Index>(std::floor((points(i, 0) + 4.0) / 8.0 * c));
    auto by = static_cast<Eigen::Index>(std::floor((points(i, 1) + 4.0) / 8.0 * c));
    bx = std::clamp<Eigen::Index>(bx, 0, c - 1);
    by = std::clamp<Eigen::Index>(by, 0, c - 1);
    hist(bx, by) += 1.0;
  }
  Eigen::MatrixXd smooth = Eigen::MatrixXd::Zero(c, c);
  for (Eigen::Index x = 0; x < c; ++x) {
    for (Eigen::Index y = 0; y < c; ++y) {
      double acc = 0.0;
      int cells = 0;
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          const Eigen::Index nx = x + dx, ny = y + dy;
          if (nx >= 0 && nx < c && ny >= 0 && ny < c) {
            acc += hist(nx, ny);
            ++cells;
          }
        }
      }
      smooth(x, y) = acc / cells;
    }
  }
  const double cutoff = threshold_per_cell * static_cast<double>(big_n);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> mark =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(c, c);
  int components = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  for (Eigen::Index x = 0; x < c; ++x) {
    for (Eigen::Index y = 0; y < c; ++y) {
      if (smooth(x, y) <= cutoff || mark(x, y)) continue;
      ++components;
      stack.push_back({x, y});
      mark(x, y) = 1;
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            const Eigen::Index nx = px + dx, ny = py + dy;
            if (nx >= 0 && nx < c && ny >= 0 && ny < c && !mark(nx, ny) &&
                smooth(nx, ny) > cutoff) {
              mark(nx, ny) = 1;
              stack.push_back({nx, ny});
            }
          }
        }
      }
    }
  }
  return components;
}

}  // namespace

TEST_CASE("toy generators: binning is the documented affine map") {
  // Box center lands in bin floor(c/2) on each axis.
  for (const Eigen::Index c : {2, 7, 92}) {
    const auto bin = static_cast<Eigen::Index>(std::floor((0.0 + 4.0) / 8.0 * c));
    CHECK(bin == c / 2);
  }
}

TEST_CASE("toy generators: all kinds produce valid seeded datasets") {
  for (const auto kind :
       {ToyKind::GaussianMixture, ToyKind::Pinwheel, ToyKind::TwoMoons}) {
    ToySpec spec;
    spec.kind = kind;
    spec.N = 500;
    spec.c = 92;
    spec.seed = 7;
    const auto data = make_toy(spec);
    CHECK(data.n == 2);
    CHECK(data.c == 92);
    CHECK(data.N == 500);
    data.validate();  // throws on any index outside [1, c]

    const auto again = make_toy(spec);
    CHECK(again.indices == data.indices);
    spec.seed = 8;
    const auto other = make_toy(spec);
    CHECK(other.indices != data.indices);
  }
}

TEST_CASE("pinwheel: at least five populated arms before discretization") {
  ToySpec spec;
  spec.kind = ToyKind::Pinwheel;
  spec.N = 10000;
  spec.c = 92;
  spec.seed = 3;
  const Eigen::MatrixXd pts = sample_toy_continuous(spec);
  CHECK(populated_components(pts, spec.c, 2.0 / static_cast<double>(spec.N)) >=
        5);
}

TEST_CASE("toy spec validation") {
  ToySpec spec;
  spec.N = 0;
  CHECK_THROWS_AS(make_toy(spec), DataError);
  spec.N = 10;
  spec.c = 1;
  CHECK_THROWS_AS(make_toy(spec), DataError);
  CHECK_THROWS_AS(toy_kind_from_string("spiral"), DataError);
}

TEST_CASE("idx loader: synthetic 2x2 fixture and threshold rule") {
  TempDir tmp("idx");
  const auto path = tmp.path("tiny.idx");
  {
    std::ofstream out(path, std::ios::binary);
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 1,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), 16);
    const unsigned char pixels[4] = {0, 128, 127, 255};
    out.write(reinterpret_cast<const char*>(pixels), 4);
  }
  const auto data = load_idx_images(path);
  CHECK(data.N == 1);
  CHECK(data.n == 4);
  CHECK(data.c == 2);
  CHECK(data(0, 0) == 1);
  CHECK(data(0, 1) == 2);
  CHECK(data(0, 2) == 1);
  CHECK(data(0, 3) == 2);

  // Round trip through save is the identity.
  const auto saved = tmp.path("tiny2.idx");
  save_idx_images(data, saved, 2, 2);
  const auto reloaded = load_idx_images(saved);
  CHECK(reloaded.indices == data.indices);

  // An all-zero image maps to all category 1.
  {
    std::ofstream out(tmp.path("zero.idx"), std::ios::binary);
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 1,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), 16);
    const unsigned char pixels[4] = {0, 0, 0, 0};
    out.write(reinterpret_cast<const char*>(pixels), 4);
  }
  const auto zero = load_idx_images(tmp.path("zero.idx"));
  for (auto idx : zero.indices) CHECK(idx == 1);
}

TEST_CASE("idx loader: distinct failure modes") {
  TempDir tmp("idxerr");
  {
    std::ofstream out(tmp.path("magic.idx"), std::ios::binary);
    const unsigned char header[16] = {0, 0, 9, 9, 0, 0, 0, 1,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), 16);
  }
  CHECK_THROWS_WITH_AS(load_idx_images(tmp.path("magic.idx")),
                       doctest::Contains("bad magic"), DataError);

  {
    std::ofstream out(tmp.path("trunc.idx"), std::ios::binary);
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 2,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), 16);
    const unsigned char pixels[3] = {1, 2, 3};
    out.write(reinterpret_cast<const char*>(pixels), 3);
  }
  CHECK_THROWS_WITH_AS(load_idx_images(tmp.path("trunc.idx")),
                       doctest::Contains("truncated"), DataError);

  {
    std::ofstream out(tmp.path("dims.idx"), std::ios::binary);
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 1,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), 16);
    const unsigned char pixels[4] = {0, 0, 0, 0};
    out.write(reinterpret_cast<const char*>(pixels), 4);
  }
  CHECK_THROWS_WITH_AS(load_idx_images(tmp.path("dims.idx"), 128, true),
                       doctest::Contains("dimension mismatch"), DataError);
}

TEST_CASE("sequence loader: mapping, errors, round trip") {
  TempDir tmp("seq");
  {
    std::ofstream out(tmp.path("ok.txt"));
    out << "ACGT\nTTAA\n";
  }
  const auto data = load_sequences(tmp.path("ok.txt"));
  CHECK(data.N == 2);
  CHECK(data.n == 4);
  CHECK(data.c == 4);
  CHECK(data(0, 0) == 1);
  CHECK(data(0, 1) == 2);
  CHECK(data(0, 2) == 3);
  CHECK(data(0, 3) == 4);

  save_sequences(data, tmp.path("rt.txt"));
  const auto back = load_sequences(tmp.path("rt.txt"));
  CHECK(back.indices == data.indices);

  {
    std::ofstream out(tmp.path("empty.txt"));
  }
  CHECK_THROWS_AS(load_sequences(tmp.path("empty.txt")), DataError);

  {
    std::ofstream out(tmp.path("ragged.txt"));
    out << "ACGT\nACG\n";
  }
  CHECK_THROWS_WITH_AS(load_sequences(tmp.path("ragged.txt")),
                       doctest::Contains("length"), DataError);

  {
    std::ofstream out(tmp.path("badchar.txt"));
    out << "ACGT\nACXT\n";
  }
  try {
    load_sequences(tmp.path("badchar.txt"));
    FAIL("accepted a character outside the alphabet");
  } catch (const DataError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
  }
}

TEST_CASE("native text format round trip") {
  TempDir tmp("text");
  ToySpec spec;
  spec.N = 50;
  spec.c = 9;
  spec.seed = 5;
  const auto data = make_toy(spec);
  save_text(data, tmp.path("d.txt"));
  const auto back = load_text(tmp.path("d.txt"));
  CHECK(back.n == data.n);
  CHECK(back.c == data.c);
  CHECK(back.N == data.N);
  CHECK(back.indices == data.indices);

  std::ifstream in(tmp.path("d.txt"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "2 9 50");
}
