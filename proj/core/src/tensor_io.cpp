#include "radocc/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace radocc {

namespace {

constexpr std::array<char, 4> kMagic = {'D', 'T', 'N', 'S'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("tensor binary: truncated header");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor_text(std::ostream& os, const Tensor& t) {
  os << "shape:";
  for (auto e : t.shape()) os << ' ' << e;
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  const std::size_t row = t.rank() ? t.shape().back() : 1;
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t[i] << (((i + 1) % row == 0) ? '\n' : ' ');
  }
}

Tensor read_tensor_text(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("shape:", 0) != 0) {
    throw std::runtime_error("tensor text: missing 'shape:' header");
  }
  std::istringstream hs(line.substr(6));
  Shape shape;
  std::size_t e;
  while (hs >> e) shape.push_back(e);
  if (shape.empty()) throw std::runtime_error("tensor text: empty shape");
  std::vector<double> data(shape_volume(shape));
  for (auto& v : data) {
    if (!(is >> v)) throw std::runtime_error("tensor text: too few values");
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor_binary(std::ostream& os, const Tensor& t) {
  os.write(kMagic.data(), 4);
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) put_u32(os, static_cast<std::uint32_t>(e));
  for (double v : t.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    put_u32(os, bits);
  }
}

Tensor read_tensor_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic.data(), 4) != 0) {
    throw std::runtime_error("tensor binary: bad magic (expected DTNS)");
  }
  const std::uint32_t rank = get_u32(is);
  if (rank == 0 || rank > 8) throw std::runtime_error("tensor binary: unsupported rank");
  Shape shape(rank);
  for (auto& e : shape) e = get_u32(is);
  std::vector<double> data(shape_volume(shape));
  for (auto& v : data) {
    v = static_cast<double>(std::bit_cast<float>(get_u32(is)));
  }
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor_binary(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  write_tensor_binary(os, t);
}

Tensor load_tensor_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  try {
    return read_tensor_binary(is);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 2) throw std::invalid_argument("write_pgm: expected H x W image");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  for (double v : image.values()) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    const auto byte = static_cast<unsigned char>(std::lround(c * 255.0));
    os.put(static_cast<char>(byte));
  }
}

Tensor channel_norm_image(const Tensor& features) {
  if (features.rank() != 3 && features.rank() != 4) {
    throw std::invalid_argument("channel_norm_image: expected C x H x W (x Z)");
  }
  const std::size_t c = features.dim(0), h = features.dim(1), w = features.dim(2);
  const std::size_t z = features.rank() == 4 ? features.dim(3) : 1;
  Tensor img({h, w});
  for (std::size_t i = 0; i < h * w; ++i) {
    double best = 0.0;
    for (std::size_t k = 0; k < z; ++k) {
      double ss = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = features[(ch * h * w + i) * z + k];
        ss += v * v;
      }
      best = std::max(best, std::sqrt(ss));
    }
    img[i] = best;
  }
  const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  const double a = *lo, b = *hi;
  for (auto& v : img.data()) v = b > a ? (v - a) / (b - a) : 0.0;
  return img;
}

}  // namespace radocc
