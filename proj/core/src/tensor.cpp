#include "radocc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radocc {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(what) + ": expected rank " +
                                std::to_string(rank) + ", got shape " +
                                shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

template <typename F>
Tensor map_unary(const Tensor& t, F f) {
  Tensor out(t.shape());
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Tensor out(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) dst[i] = f(pa[i], pb[i]);
  return out;
}

}  // namespace

std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {
  for (auto e : shape_) {
    if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape " + shape_str(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_volume(shape_)) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
  }
  for (auto e : shape_) {
    if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape " + shape_str(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw std::invalid_argument("Tensor::dim: axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::plane_size() const noexcept {
  if (shape_.empty()) return 0;
  return data_.size() / shape_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

// ---------------------------------------------------------------------------

void bilinear_accumulate(const Tensor& map, std::size_t c0, std::size_t c1,
                         double x, double y, double weight,
                         std::span<double> out) noexcept {
  const auto h = static_cast<long>(map.shape()[1]);
  const auto w = static_cast<long>(map.shape()[2]);
  const std::size_t plane = static_cast<std::size_t>(h * w);
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const long x0 = static_cast<long>(fx);
  const long y0 = static_cast<long>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const long xs[2] = {x0, x0 + 1};
  const long ys[2] = {y0, y0 + 1};
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  const double* base = map.data().data();
  for (int j = 0; j < 2; ++j) {
    if (ys[j] < 0 || ys[j] >= h || wy[j] == 0.0) continue;
    for (int i = 0; i < 2; ++i) {
      if (xs[i] < 0 || xs[i] >= w || wx[i] == 0.0) continue;
      const double cw = weight * wy[j] * wx[i];
      const std::size_t off = static_cast<std::size_t>(ys[j] * w + xs[i]);
      for (std::size_t c = c0; c < c1; ++c) {
        out[c - c0] += cw * base[c * plane + off];
      }
    }
  }
}

void trilinear_accumulate(const Tensor& vol, std::size_t c0, std::size_t c1,
                          double x, double y, double z, double weight,
                          std::span<double> out) noexcept {
  const auto h = static_cast<long>(vol.shape()[1]);
  const auto w = static_cast<long>(vol.shape()[2]);
  const auto d = static_cast<long>(vol.shape()[3]);
  const std::size_t plane = static_cast<std::size_t>(h * w * d);
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double fz = std::floor(z);
  const long x0 = static_cast<long>(fx);
  const long y0 = static_cast<long>(fy);
  const long z0 = static_cast<long>(fz);
  const double ax = x - fx;
  const double ay = y - fy;
  const double az = z - fz;
  const long xs[2] = {x0, x0 + 1};
  const long ys[2] = {y0, y0 + 1};
  const long zs[2] = {z0, z0 + 1};
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  const double wz[2] = {1.0 - az, az};
  const double* base = vol.data().data();
  for (int j = 0; j < 2; ++j) {
    if (ys[j] < 0 || ys[j] >= h || wy[j] == 0.0) continue;
    for (int i = 0; i < 2; ++i) {
      if (xs[i] < 0 || xs[i] >= w || wx[i] == 0.0) continue;
      for (int k = 0; k < 2; ++k) {
        if (zs[k] < 0 || zs[k] >= d || wz[k] == 0.0) continue;
        const double cw = weight * wy[j] * wx[i] * wz[k];
        const std::size_t off = static_cast<std::size_t>((ys[j] * w + xs[i]) * d + zs[k]);
        for (std::size_t c = c0; c < c1; ++c) {
          out[c - c0] += cw * base[c * plane + off];
        }
      }
    }
  }
}

Tensor bilinear_sample(const Tensor& map, std::span<const Point2> points) {
  require_rank(map, 3, "bilinear_sample");
  const std::size_t c = map.dim(0);
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("bilinear_sample: no sample points");
  Tensor out({c, n});
  std::vector<double> col(c);
  for (std::size_t p = 0; p < n; ++p) {
    std::fill(col.begin(), col.end(), 0.0);
    bilinear_accumulate(map, 0, c, points[p].x, points[p].y, 1.0, col);
    for (std::size_t ch = 0; ch < c; ++ch) out.at(ch, p) = col[ch];
  }
  return out;
}

Tensor trilinear_sample(const Tensor& vol, std::span<const Point3> points) {
  require_rank(vol, 4, "trilinear_sample");
  const std::size_t c = vol.dim(0);
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("trilinear_sample: no sample points");
  Tensor out({c, n});
  std::vector<double> col(c);
  for (std::size_t p = 0; p < n; ++p) {
    std::fill(col.begin(), col.end(), 0.0);
    trilinear_accumulate(vol, 0, c, points[p].x, points[p].y, points[p].z, 1.0, col);
    for (std::size_t ch = 0; ch < c; ++ch) out.at(ch, p) = col[ch];
  }
  return out;
}

Tensor resize_bilinear(const Tensor& map, std::size_t out_h, std::size_t out_w) {
  require_rank(map, 3, "resize_bilinear");
  if (out_h == 0 || out_w == 0) {
    throw std::invalid_argument("resize_bilinear: output extents must be >= 1");
  }
  const std::size_t c = map.dim(0);
  const std::size_t h = map.dim(1);
  const std::size_t w = map.dim(2);
  auto src_coord = [](std::size_t i, std::size_t in, std::size_t out) {
    if (out == 1) return static_cast<double>(in - 1) / 2.0;
    return static_cast<double>(i) * static_cast<double>(in - 1) /
           static_cast<double>(out - 1);
  };
  Tensor out({c, out_h, out_w});
  std::vector<double> col(c);
  for (std::size_t i = 0; i < out_h; ++i) {
    const double sy = src_coord(i, h, out_h);
    for (std::size_t j = 0; j < out_w; ++j) {
      const double sx = src_coord(j, w, out_w);
      std::fill(col.begin(), col.end(), 0.0);
      bilinear_accumulate(map, 0, c, sx, sy, 1.0, col);
      for (std::size_t ch = 0; ch < c; ++ch) out.at(ch, i, j) = col[ch];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void softmax_inplace(std::span<double> v) noexcept {
  if (v.empty()) return;
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  for (auto& x : v) x /= s;
}

Tensor softmax(const Tensor& v, std::size_t axis) {
  if (axis >= v.rank()) {
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(v.shape()));
  }
  const auto& s = v.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Tensor out = v;
  auto d = out.data();
  std::vector<double> buf(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      for (std::size_t k = 0; k < n; ++k) buf[k] = d[(o * n + k) * inner + in];
      softmax_inplace(buf);
      for (std::size_t k = 0; k < n; ++k) d[(o * n + k) * inner + in] = buf[k];
    }
  }
  return out;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& t) {
  return map_unary(t, [](double x) { return sigmoid(x); });
}

Tensor relu(const Tensor& t) {
  return map_unary(t, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return map_binary(a, b, "add", std::plus<>());
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return map_binary(a, b, "sub", std::minus<>());
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return map_binary(a, b, "mul", std::multiplies<>());
}
Tensor scale(const Tensor& a, double s) {
  return map_unary(a, [s](double x) { return s * x; });
}

Tensor channel_affine(const Tensor& x, std::span<const double> scale,
                      std::span<const double> shift) {
  const std::size_t c = x.dim(0);
  if (scale.size() != c || shift.size() != c) {
    throw std::invalid_argument("channel_affine: expected " + std::to_string(c) +
                                " scale/shift entries");
  }
  Tensor out = x;
  const std::size_t plane = x.plane_size();
  auto d = out.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      d[ch * plane + i] = scale[ch] * d[ch * plane + i] + shift[ch];
    }
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  Shape trailing(parts[0]->shape().begin() + 1, parts[0]->shape().end());
  std::size_t channels = 0;
  for (const Tensor* p : parts) {
    Shape t(p->shape().begin() + 1, p->shape().end());
    if (t != trailing) {
      throw std::invalid_argument("concat_channels: trailing extents differ: " +
                                  shape_str(parts[0]->shape()) + " vs " +
                                  shape_str(p->shape()));
    }
    channels += p->dim(0);
  }
  Shape shape{channels};
  shape.insert(shape.end(), trailing.begin(), trailing.end());
  std::vector<double> data;
  data.reserve(shape_volume(shape));
  for (const Tensor* p : parts) {
    data.insert(data.end(), p->values().begin(), p->values().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Tensor* parts[2] = {&a, &b};
  return concat_channels(parts);
}

Tensor unsqueeze_height(const Tensor& bev, std::size_t n) {
  require_rank(bev, 3, "unsqueeze_height");
  if (n == 0) throw std::invalid_argument("unsqueeze_height: n must be >= 1");
  Tensor out({bev.dim(0), bev.dim(1), bev.dim(2), n});
  auto src = bev.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::fill_n(dst.begin() + static_cast<std::ptrdiff_t>(i * n), n, src[i]);
  }
  return out;
}

Tensor squeeze_height_mean(const Tensor& vol) {
  require_rank(vol, 4, "squeeze_height_mean");
  const std::size_t n = vol.dim(3);
  Tensor out({vol.dim(0), vol.dim(1), vol.dim(2)});
  auto src = vol.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += src[i * n + k];
    dst[i] = s / static_cast<double>(n);
  }
  return out;
}

Tensor rms_norm_channels(const Tensor& x, double eps) {
  const std::size_t c = x.dim(0);
  const std::size_t plane = x.plane_size();
  Tensor out = x;
  auto d = out.data();
  for (std::size_t i = 0; i < plane; ++i) {
    double ss = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) ss += d[ch * plane + i] * d[ch * plane + i];
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(c) + eps);
    for (std::size_t ch = 0; ch < c; ++ch) d[ch * plane + i] *= inv;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride,
                        std::size_t padding, const char* what) {
  if (in + 2 * padding < k) {
    throw std::invalid_argument(std::string(what) + ": kernel larger than padded input");
  }
  return (in + 2 * padding - k) / stride + 1;
}

void check_conv_args(const Tensor& input, const Tensor& kernel,
                     std::span<const double> bias, std::size_t stride,
                     std::size_t spatial, const char* what) {
  require_rank(input, spatial + 1, what);
  require_rank(kernel, spatial + 2, what);
  if (kernel.dim(1) != input.dim(0)) {
    throw std::invalid_argument(std::string(what) + ": kernel expects " +
                                std::to_string(kernel.dim(1)) + " input channels, got " +
                                std::to_string(input.dim(0)));
  }
  const std::size_t k = kernel.dim(2);
  for (std::size_t a = 2; a < kernel.rank(); ++a) {
    if (kernel.dim(a) != k) {
      throw std::invalid_argument(std::string(what) + ": kernel must be cubic");
    }
  }
  if (k % 2 == 0) {
    throw std::invalid_argument(std::string(what) + ": kernel extent must be odd");
  }
  if (!bias.empty() && bias.size() != kernel.dim(0)) {
    throw std::invalid_argument(std::string(what) + ": bias length mismatch");
  }
  if (stride == 0) throw std::invalid_argument(std::string(what) + ": stride must be >= 1");
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel,
              std::span<const double> bias, std::size_t stride,
              std::size_t padding) {
  check_conv_args(input, kernel, bias, stride, 2, "conv2d");
  const std::size_t ci = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t co = kernel.dim(0), k = kernel.dim(2);
  const std::size_t oh = conv_extent(h, k, stride, padding, "conv2d");
  const std::size_t ow = conv_extent(w, k, stride, padding, "conv2d");
  Tensor out({co, oh, ow});
  auto dst = out.data();
  auto src = input.data();
  auto ker = kernel.data();
  const auto ph = static_cast<long>(padding);
  for (std::size_t o = 0; o < co; ++o) {
    double* op = dst.data() + o * oh * ow;
    if (!bias.empty()) std::fill(op, op + oh * ow, bias[o]);
    for (std::size_t c = 0; c < ci; ++c) {
      const double* ip = src.data() + c * h * w;
      for (std::size_t kh = 0; kh < k; ++kh) {
        for (std::size_t kw = 0; kw < k; ++kw) {
          const double wv = ker[((o * ci + c) * k + kh) * k + kw];
          if (wv == 0.0) continue;
          for (std::size_t y = 0; y < oh; ++y) {
            const long iy = static_cast<long>(y * stride + kh) - ph;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t x = 0; x < ow; ++x) {
              const long ix = static_cast<long>(x * stride + kw) - ph;
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              op[y * ow + x] += wv * ip[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv3d(const Tensor& input, const Tensor& kernel,
              std::span<const double> bias, std::size_t stride,
              std::size_t padding) {
  check_conv_args(input, kernel, bias, stride, 3, "conv3d");
  const std::size_t ci = input.dim(0), h = input.dim(1), w = input.dim(2), d = input.dim(3);
  const std::size_t co = kernel.dim(0), k = kernel.dim(2);
  const std::size_t oh = conv_extent(h, k, stride, padding, "conv3d");
  const std::size_t ow = conv_extent(w, k, stride, padding, "conv3d");
  const std::size_t od = conv_extent(d, k, stride, padding, "conv3d");
  Tensor out({co, oh, ow, od});
  auto dst = out.data();
  auto src = input.data();
  auto ker = kernel.data();
  const auto p = static_cast<long>(padding);
  const std::size_t oplane = oh * ow * od;
  const std::size_t iplane = h * w * d;
  for (std::size_t o = 0; o < co; ++o) {
    double* op = dst.data() + o * oplane;
    if (!bias.empty()) std::fill(op, op + oplane, bias[o]);
    for (std::size_t c = 0; c < ci; ++c) {
      const double* ip = src.data() + c * iplane;
      for (std::size_t kh = 0; kh < k; ++kh) {
        for (std::size_t kw = 0; kw < k; ++kw) {
          for (std::size_t kd = 0; kd < k; ++kd) {
            const double wv = ker[(((o * ci + c) * k + kh) * k + kw) * k + kd];
            if (wv == 0.0) continue;
            for (std::size_t y = 0; y < oh; ++y) {
              const long iy = static_cast<long>(y * stride + kh) - p;
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (std::size_t x = 0; x < ow; ++x) {
                const long ix = static_cast<long>(x * stride + kw) - p;
                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                const double* row = ip + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * d;
                double* orow = op + (y * ow + x) * od;
                for (std::size_t z = 0; z < od; ++z) {
                  const long iz = static_cast<long>(z * stride + kd) - p;
                  if (iz < 0 || iz >= static_cast<long>(d)) continue;
                  orow[z] += wv * row[iz];
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv_transpose3d(const Tensor& input, const Tensor& kernel,
                        std::span<const double> bias, std::size_t stride) {
  require_rank(input, 4, "conv_transpose3d");
  require_rank(kernel, 5, "conv_transpose3d");
  if (kernel.dim(0) != input.dim(0)) {
    throw std::invalid_argument("conv_transpose3d: kernel expects " +
                                std::to_string(kernel.dim(0)) + " input channels, got " +
                                std::to_string(input.dim(0)));
  }
  if (stride == 0) throw std::invalid_argument("conv_transpose3d: stride must be >= 1");
  const std::size_t ci = input.dim(0), h = input.dim(1), w = input.dim(2), d = input.dim(3);
  const std::size_t co = kernel.dim(1), k = kernel.dim(2);
  if (kernel.dim(3) != k || kernel.dim(4) != k) {
    throw std::invalid_argument("conv_transpose3d: kernel must be cubic");
  }
  if (!bias.empty() && bias.size() != co) {
    throw std::invalid_argument("conv_transpose3d: bias length mismatch");
  }
  const std::size_t oh = (h - 1) * stride + k;
  const std::size_t ow = (w - 1) * stride + k;
  const std::size_t od = (d - 1) * stride + k;
  Tensor out({co, oh, ow, od});
  auto dst = out.data();
  auto src = input.data();
  auto ker = kernel.data();
  const std::size_t oplane = oh * ow * od;
  if (!bias.empty()) {
    for (std::size_t o = 0; o < co; ++o) {
      std::fill(dst.begin() + static_cast<std::ptrdiff_t>(o * oplane),
                dst.begin() + static_cast<std::ptrdiff_t>((o + 1) * oplane), bias[o]);
    }
  }
  for (std::size_t c = 0; c < ci; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t z = 0; z < d; ++z) {
          const double v = src[((c * h + y) * w + x) * d + z];
          if (v == 0.0) continue;
          for (std::size_t o = 0; o < co; ++o) {
            double* op = dst.data() + o * oplane;
            for (std::size_t kh = 0; kh < k; ++kh) {
              for (std::size_t kw = 0; kw < k; ++kw) {
                for (std::size_t kd = 0; kd < k; ++kd) {
                  const double wv = ker[(((c * co + o) * k + kh) * k + kw) * k + kd];
                  op[((y * stride + kh) * ow + (x * stride + kw)) * od + (z * stride + kd)] += v * wv;
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(const Tensor& t) noexcept {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace radocc
