#ifndef CDCGAN_TENSOR_HPP
#define CDCGAN_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cdcgan {

/// Thrown whenever tensor shapes or layer configurations are incompatible.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NHWC extents. All four must be >= 1 for a valid tensor.
struct Shape {
  std::size_t batch = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;

  [[nodiscard]] constexpr std::size_t size() const noexcept {
    return batch * height * width * channels;
  }
  [[nodiscard]] constexpr bool valid() const noexcept {
    return batch >= 1 && height >= 1 && width >= 1 && channels >= 1;
  }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '(' << s.batch << ',' << s.height << ',' << s.width << ',' << s.channels << ')';
  return os.str();
}

/// Dense 4-D array of doubles in row-major NHWC order.
///
/// Kernels reuse the same container with the axes reinterpreted as
/// (kernel_h, kernel_w, in_channels, out_channels).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape) {
    if (!shape_.valid()) {
      throw ShapeError("tensor dimensions must all be >= 1, got " + to_string(shape_));
    }
    data_.assign(shape_.size(), fill);
  }

  Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
    if (!shape_.valid()) {
      throw ShapeError("tensor dimensions must all be >= 1, got " + to_string(shape_));
    }
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t batch() const noexcept { return shape_.batch; }
  [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
  [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }
  [[nodiscard]] std::size_t channels() const noexcept { return shape_.channels; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }

  [[nodiscard]] std::size_t index(std::size_t b, std::size_t y, std::size_t x,
                                  std::size_t c) const noexcept {
    return ((b * shape_.height + y) * shape_.width + x) * shape_.channels + c;
  }
  double& operator()(std::size_t b, std::size_t y, std::size_t x, std::size_t c) noexcept {
    return data_[index(b, y, x, c)];
  }
  const double& operator()(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return data_[index(b, y, x, c)];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  const double& operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

/// Stacks tensors along the channel axis; all inputs must agree on (batch, height, width).
inline Tensor concat_channels(std::initializer_list<const Tensor*> parts) {
  if (parts.size() == 0) throw ShapeError("concat_channels: no inputs");
  const Shape& first = (*parts.begin())->shape();
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    const Shape& s = p->shape();
    if (s.batch != first.batch || s.height != first.height || s.width != first.width) {
      throw ShapeError("concat_channels: spatial mismatch " + to_string(first) + " vs " +
                       to_string(s));
    }
    total += s.channels;
  }
  Tensor out({first.batch, first.height, first.width, total});
  const std::size_t pixels = first.batch * first.height * first.width;
  double* dst = out.data();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (const Tensor* t : parts) {
      const std::size_t c = t->channels();
      const double* src = t->data() + p * c;
      dst = std::copy(src, src + c, dst);
    }
  }
  return out;
}

/// Copies channels [first, first + count) into a new tensor.
inline Tensor slice_channels(const Tensor& t, std::size_t first, std::size_t count) {
  if (count == 0 || first + count > t.channels()) {
    throw ShapeError("slice_channels: range [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") outside " + to_string(t.shape()));
  }
  Tensor out({t.batch(), t.height(), t.width(), count});
  const std::size_t pixels = t.batch() * t.height() * t.width();
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* src = t.data() + p * t.channels() + first;
    std::copy(src, src + count, out.data() + p * count);
  }
  return out;
}

/// Adds `src` into channels [first, first + src.channels) of `dst`.
inline void accumulate_channels(Tensor& dst, std::size_t first, const Tensor& src) {
  if (dst.batch() != src.batch() || dst.height() != src.height() || dst.width() != src.width() ||
      first + src.channels() > dst.channels()) {
    throw ShapeError("accumulate_channels: " + to_string(src.shape()) + " does not fit into " +
                     to_string(dst.shape()) + " at channel " + std::to_string(first));
  }
  const std::size_t pixels = src.batch() * src.height() * src.width();
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* s = src.data() + p * src.channels();
    double* d = dst.data() + p * dst.channels() + first;
    for (std::size_t c = 0; c < src.channels(); ++c) d[c] += s[c];
  }
}

/// Extracts one batch item as a batch-1 tensor.
inline Tensor batch_item(const Tensor& t, std::size_t b) {
  if (b >= t.batch()) throw ShapeError("batch_item: index out of range");
  const std::size_t n = t.height() * t.width() * t.channels();
  std::vector<double> v(t.data() + b * n, t.data() + (b + 1) * n);
  return Tensor({1, t.height(), t.width(), t.channels()}, std::move(v));
}

/// Stacks batch-1 (or larger) tensors of identical HWC extents along the batch axis.
inline Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty()) throw ShapeError("stack_batch: no inputs");
  const Shape s0 = items.front().shape();
  std::size_t total = 0;
  for (const Tensor& t : items) {
    if (t.height() != s0.height || t.width() != s0.width || t.channels() != s0.channels) {
      throw ShapeError("stack_batch: mismatch " + to_string(s0) + " vs " + to_string(t.shape()));
    }
    total += t.batch();
  }
  std::vector<double> v;
  v.reserve(total * s0.height * s0.width * s0.channels);
  for (const Tensor& t : items) v.insert(v.end(), t.values().begin(), t.values().end());
  return Tensor({total, s0.height, s0.width, s0.channels}, std::move(v));
}

}  // namespace cdcgan

#endif  // CDCGAN_TENSOR_HPP
