#include "gpcaflow/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "gpcaflow/rng.hpp"

namespace gpcaflow {

OneHotDataset OneHotDataset::empty(Eigen::Index n, Eigen::Index c) {
  OneHotDataset d;
  d.n = n;
  d.c = c;
  d.N = 0;
  return d;
}

void OneHotDataset::validate() const {
  if (n < 1 || c < 2) {
    throw DataError("OneHotDataset: need n >= 1 and c >= 2");
  }
  if (indices.size() != static_cast<std::size_t>(N * n)) {
    throw DataError("OneHotDataset: index storage does not match N * n");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 1 || indices[i] > c) {
      throw DataError("OneHotDataset: index out of range [1, c] at entry " +
                      std::to_string(i));
    }
  }
}

namespace datasets {

ToyKind toy_kind_from_string(std::string_view name) {
  if (name == "gaussian-mixture") return ToyKind::GaussianMixture;
  if (name == "pinwheel") return ToyKind::Pinwheel;
  if (name == "two-moons") return ToyKind::TwoMoons;
  throw DataError("unknown toy dataset kind: \"" + std::string(name) +
                  "\" (expected gaussian-mixture | pinwheel | two-moons)");
}

std::string to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::GaussianMixture:
      return "gaussian-mixture";
    case ToyKind::Pinwheel:
      return "pinwheel";
    case ToyKind::TwoMoons:
      return "two-moons";
  }
  return "?";
}

namespace {

constexpr double kBoxHalf = 4.0;

void sample_mixture(const ToySpec& spec, Rng& rng, Eigen::MatrixXd& out) {
  const int k = spec.mixture_components;
  for (Eigen::Index i = 0; i < spec.N; ++i) {
    const auto comp = static_cast<double>(rng.below(static_cast<std::uint64_t>(k)));
    const double angle = 2.0 * std::numbers::pi * comp / k;
    out(i, 0) = spec.mixture_radius * std::cos(angle) +
                spec.mixture_sigma * rng.normal();
    out(i, 1) = spec.mixture_radius * std::sin(angle) +
                spec.mixture_sigma * rng.normal();
  }
}

void sample_pinwheel(const ToySpec& spec, Rng& rng, Eigen::MatrixXd& out) {
  const int arms = spec.pinwheel_arms;
  for (Eigen::Index i = 0; i < spec.N; ++i) {
    const auto arm = static_cast<double>(rng.below(static_cast<std::uint64_t>(arms)));
    const double radial = 1.0 + spec.pinwheel_radial_std * rng.normal();
    const double tangential = spec.pinwheel_tangential_std * rng.normal();
    const double angle = 2.0 * std::numbers::pi * arm / arms +
                         spec.pinwheel_rate * std::exp(radial);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    out(i, 0) = spec.pinwheel_scale * (ca * radial - sa * tangential);
    out(i, 1) = spec.pinwheel_scale * (sa * radial + ca * tangential);
  }
}

void sample_moons(const ToySpec& spec, Rng& rng, Eigen::MatrixXd& out) {
  const double r = spec.moons_radius;
  for (Eigen::Index i = 0; i < spec.N; ++i) {
    const bool upper = rng.uniform() < 0.5;
    const double t = std::numbers::pi * rng.uniform();
    double x, y;
    if (upper) {
      x = r * std::cos(t) - r / 2.0;
      y = r * std::sin(t) - r / 4.0;
    } else {
      x = r / 2.0 - r * std::cos(t);
      y = r / 4.0 - r * std::sin(t);
    }
    out(i, 0) = x + spec.moons_noise * rng.normal();
    out(i, 1) = y + spec.moons_noise * rng.normal();
  }
}

std::ifstream open_binary(const std::filesystem::path& path,
                          const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(what + ": cannot open " + path.string());
  }
  return in;
}

std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError(what + ": truncated file");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Eigen::MatrixXd sample_toy_continuous(const ToySpec& spec) {
  if (spec.N < 1) throw DataError("ToySpec: N must be >= 1");
  if (spec.c < 2) throw DataError("ToySpec: c must be >= 2");
  Eigen::MatrixXd out(spec.N, 2);
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ToyKind::GaussianMixture:
      sample_mixture(spec, rng, out);
      break;
    case ToyKind::Pinwheel:
      sample_pinwheel(spec, rng, out);
      break;
    case ToyKind::TwoMoons:
      sample_moons(spec, rng, out);
      break;
  }
  return out;
}

OneHotDataset make_toy(const ToySpec& spec) {
  const Eigen::MatrixXd points = sample_toy_continuous(spec);
  OneHotDataset data;
  data.n = 2;
  data.c = spec.c;
  data.N = spec.N;
  data.indices.resize(static_cast<std::size_t>(2 * spec.N));
  const double scale = static_cast<double>(spec.c) / (2.0 * kBoxHalf);
  for (Eigen::Index i = 0; i < spec.N; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      auto bin = static_cast<Eigen::Index>(
          std::floor((points(i, j) + kBoxHalf) * scale));
      bin = std::clamp<Eigen::Index>(bin, 0, spec.c - 1);
      data(i, j) = static_cast<std::int32_t>(bin + 1);
    }
  }
  return data;
}

OneHotDataset load_idx_images(const std::filesystem::path& path, int threshold,
                              bool pad_28_to_32) {
  auto in = open_binary(path, "load_idx_images");
  const std::uint32_t magic = read_be_u32(in, "load_idx_images");
  if (magic != 0x00000803u) {
    throw DataError("load_idx_images: bad magic " + std::to_string(magic) +
                    " (expected 0x00000803)");
  }
  const std::uint32_t count = read_be_u32(in, "load_idx_images");
  const std::uint32_t rows = read_be_u32(in, "load_idx_images");
  const std::uint32_t cols = read_be_u32(in, "load_idx_images");
  if (pad_28_to_32 && (rows != 28 || cols != 28)) {
    throw DataError("load_idx_images: dimension mismatch, padding expects "
                    "28x28 images but file has " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  const std::size_t pixels =
      static_cast<std::size_t>(count) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(pixels));
  if (static_cast<std::size_t>(in.gcount()) != pixels) {
    throw DataError("load_idx_images: truncated file, expected " +
                    std::to_string(pixels) + " pixels");
  }

  const Eigen::Index out_rows = pad_28_to_32 ? 32 : static_cast<Eigen::Index>(rows);
  const Eigen::Index out_cols = pad_28_to_32 ? 32 : static_cast<Eigen::Index>(cols);
  const Eigen::Index pad = pad_28_to_32 ? 2 : 0;

  OneHotDataset data;
  data.n = out_rows * out_cols;
  data.c = 2;
  data.N = static_cast<Eigen::Index>(count);
  data.indices.assign(static_cast<std::size_t>(data.N * data.n), 1);
  for (Eigen::Index i = 0; i < data.N; ++i) {
    const unsigned char* img = raw.data() + i * rows * cols;
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t col = 0; col < cols; ++col) {
        if (img[r * cols + col] >= threshold) {
          const Eigen::Index j = (r + pad) * out_cols + (col + pad);
          data(i, j) = 2;
        }
      }
    }
  }
  return data;
}

void save_idx_images(const OneHotDataset& data,
                     const std::filesystem::path& path, Eigen::Index rows,
                     Eigen::Index cols) {
  if (data.c != 2) {
    throw DataError("save_idx_images: dataset must have c = 2");
  }
  if (rows * cols != data.n) {
    throw DataError("save_idx_images: rows*cols must equal n");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_idx_images: cannot open " + path.string());
  write_be_u32(out, 0x00000803u);
  write_be_u32(out, static_cast<std::uint32_t>(data.N));
  write_be_u32(out, static_cast<std::uint32_t>(rows));
  write_be_u32(out, static_cast<std::uint32_t>(cols));
  std::vector<unsigned char> raw(static_cast<std::size_t>(data.N * data.n));
  for (Eigen::Index i = 0; i < data.N; ++i) {
    for (Eigen::Index j = 0; j < data.n; ++j) {
      raw[static_cast<std::size_t>(i * data.n + j)] =
          data(i, j) == 2 ? 255 : 0;
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("save_idx_images: write failed");
}

OneHotDataset load_sequences(const std::filesystem::path& path,
                             std::string_view alphabet) {
  if (alphabet.size() < 2) {
    throw DataError("load_sequences: alphabet needs at least two symbols");
  }
  std::ifstream in(path);
  if (!in) throw DataError("load_sequences: cannot open " + path.string());

  std::array<std::int32_t, 256> lut;
  lut.fill(0);
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    lut[static_cast<unsigned char>(alphabet[k])] =
        static_cast<std::int32_t>(k + 1);
  }

  OneHotDataset data;
  data.c = static_cast<Eigen::Index>(alphabet.size());
  std::string line;
  Eigen::Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (data.N == 0) {
      data.n = static_cast<Eigen::Index>(line.size());
    } else if (static_cast<Eigen::Index>(line.size()) != data.n) {
      throw DataError("load_sequences: line " + std::to_string(line_no) +
                      " has length " + std::to_string(line.size()) +
                      ", expected " + std::to_string(data.n));
    }
    for (std::size_t col = 0; col < line.size(); ++col) {
      const std::int32_t idx = lut[static_cast<unsigned char>(line[col])];
      if (idx == 0) {
        throw DataError("load_sequences: line " + std::to_string(line_no) +
                        " column " + std::to_string(col + 1) +
                        ": character '" + line[col] +
                        "' is not in the alphabet");
      }
      data.indices.push_back(idx);
    }
    ++data.N;
  }
  if (data.N == 0) {
    throw DataError("load_sequences: " + path.string() +
                    " contains no sequences");
  }
  return data;
}

void save_sequences(const OneHotDataset& data,
                    const std::filesystem::path& path,
                    std::string_view alphabet) {
  if (data.c > static_cast<Eigen::Index>(alphabet.size())) {
    throw DataError("save_sequences: alphabet smaller than category count");
  }
  std::ofstream out(path);
  if (!out) throw DataError("save_sequences: cannot open " + path.string());
  std::string line(static_cast<std::size_t>(data.n), '?');
  for (Eigen::Index i = 0; i < data.N; ++i) {
    for (Eigen::Index j = 0; j < data.n; ++j) {
      line[static_cast<std::size_t>(j)] =
          alphabet[static_cast<std::size_t>(data(i, j) - 1)];
    }
    out << line << '\n';
  }
  if (!out) throw DataError("save_sequences: write failed");
}

OneHotDataset load_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_text: cannot open " + path.string());
  OneHotDataset data;
  if (!(in >> data.n >> data.c >> data.N)) {
    throw DataError("load_text: malformed header in " + path.string());
  }
  if (data.n < 1 || data.c < 2 || data.N < 0) {
    throw DataError("load_text: invalid header dimensions in " +
                    path.string());
  }
  data.indices.resize(static_cast<std::size_t>(data.N * data.n));
  for (std::size_t k = 0; k < data.indices.size(); ++k) {
    if (!(in >> data.indices[k])) {
      throw DataError("load_text: truncated data in " + path.string());
    }
  }
  data.validate();
  return data;
}

void save_text(const OneHotDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_text: cannot open " + path.string());
  out << data.n << ' ' << data.c << ' ' << data.N << '\n';
  for (Eigen::Index i = 0; i < data.N; ++i) {
    for (Eigen::Index j = 0; j < data.n; ++j) {
      if (j) out << ' ';
      out << data(i, j);
    }
    out << '\n';
  }
  if (!out) throw DataError("save_text: write failed");
}

}  // namespace datasets
}  // namespace gpcaflow
