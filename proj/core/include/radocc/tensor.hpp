#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace radocc {

using Shape = std::vector<std::size_t>;

/// Dense row-major array of doubles. Feature maps put the channel axis first:
/// images and BEV maps are C x H x W, voxel volumes are C x H x W x Z.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  template <typename... Idx>
  double& at(Idx... idx) noexcept {
    return data_[offset_of(idx...)];
  }
  template <typename... Idx>
  double at(Idx... idx) const noexcept {
    return data_[offset_of(idx...)];
  }

  /// Number of elements in one slice of the leading axis (H*W for C x H x W).
  std::size_t plane_size() const noexcept;

  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor&) const = default;

 private:
  template <typename... Idx>
  std::size_t offset_of(Idx... idx) const noexcept {
    assert(sizeof...(Idx) == shape_.size());
    std::size_t off = 0;
    std::size_t axis = 0;
    ((off = off * shape_[axis++] + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_volume(const Shape& shape);

struct Point2 {
  double x;  // column (W axis), grid units
  double y;  // row (H axis), grid units
};

struct Point3 {
  double x;  // W axis
  double y;  // H axis
  double z;  // Z axis
};

// ---------------------------------------------------------------------------
// Sampling. Out-of-range corners contribute zero (zero padding).

Tensor bilinear_sample(const Tensor& map, std::span<const Point2> points);
Tensor trilinear_sample(const Tensor& vol, std::span<const Point3> points);

/// Accumulates weight * map[c0:c1, y, x] into out[0:c1-c0]. The batched
/// samplers and the deformable attention kernels share this path.
void bilinear_accumulate(const Tensor& map, std::size_t c0, std::size_t c1,
                         double x, double y, double weight,
                         std::span<double> out) noexcept;
void trilinear_accumulate(const Tensor& vol, std::size_t c0, std::size_t c1,
                          double x, double y, double z, double weight,
                          std::span<double> out) noexcept;

/// Align-corners bilinear resize of a C x H x W map. An output extent of 1
/// samples the input center along that axis.
Tensor resize_bilinear(const Tensor& map, std::size_t out_h, std::size_t out_w);

// ---------------------------------------------------------------------------
// Activations and elementwise ops.

Tensor softmax(const Tensor& v, std::size_t axis);
void softmax_inplace(std::span<double> v) noexcept;

double sigmoid(double x) noexcept;
Tensor sigmoid(const Tensor& t);
Tensor relu(const Tensor& t);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

/// y[c, ...] = scale[c] * x[c, ...] + shift[c]
Tensor channel_affine(const Tensor& x, std::span<const double> scale,
                      std::span<const double> shift);

/// Concatenates along the channel (leading) axis. Trailing extents must agree.
Tensor concat_channels(std::span<const Tensor* const> parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// C x H x W -> C x H x W x n, every slice along the new axis identical.
Tensor unsqueeze_height(const Tensor& bev, std::size_t n);
/// C x H x W x Z -> C x H x W, mean over Z.
Tensor squeeze_height_mean(const Tensor& vol);

/// Per-location scale-only RMS normalization across channels.
Tensor rms_norm_channels(const Tensor& x, double eps = 1e-6);

// ---------------------------------------------------------------------------
// Convolutions. Kernels are Cout x Cin x k x k (x k), cross-correlation with
// zero padding. `bias` may be empty.

Tensor conv2d(const Tensor& input, const Tensor& kernel,
              std::span<const double> bias, std::size_t stride,
              std::size_t padding);
Tensor conv3d(const Tensor& input, const Tensor& kernel,
              std::span<const double> bias, std::size_t stride,
              std::size_t padding);

/// Transposed 3-D convolution with kernel Cin x Cout x k x k x k and no
/// padding: out extent = (in - 1) * stride + k.
Tensor conv_transpose3d(const Tensor& input, const Tensor& kernel,
                        std::span<const double> bias, std::size_t stride);

// ---------------------------------------------------------------------------

double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t) noexcept;

}  // namespace radocc
