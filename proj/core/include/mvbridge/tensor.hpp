#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace mvbridge {

class Rng;

// Allocator that skips value-initialization; tensor buffers are written in
// full by every producing op, so the zero-fill would be pure overhead.
template <typename T>
struct UninitAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = UninitAllocator<U>;
  };
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) > 0) ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

using TensorStorage = std::vector<double, UninitAllocator<double>>;

// Dense row-major tensor of f64. The single value type every module trades
// in: latents, parameters, gradients, feature maps.
//
// Tensor(shape) leaves the buffer uninitialized; use zeros() when the
// contents must start at 0.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);
  Tensor(std::vector<std::int64_t> shape, TensorStorage data);
  Tensor(std::vector<std::int64_t> shape, std::initializer_list<double> data);
  Tensor(std::initializer_list<std::int64_t> shape) : Tensor(std::vector<std::int64_t>(shape)) {}

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, double value);
  static Tensor scalar(double value);
  // Uniform in [-bound, bound].
  static Tensor uniform(std::vector<std::int64_t> shape, double bound, Rng& rng);
  static Tensor normal(std::vector<std::int64_t> shape, double stddev, Rng& rng);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Row-major offset for a multi-index; bounds unchecked.
  double& at(std::initializer_list<std::int64_t> idx);
  double at(std::initializer_list<std::int64_t> idx) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_str() const;

 private:
  std::vector<std::int64_t> shape_;
  TensorStorage data_;
};

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);
std::string shape_to_string(const std::vector<std::int64_t>& shape);

// Checkpoint payload format: one UTF-8 JSON header line
// {"shape":[...],"dtype":"f64"}\n followed by the row-major values as
// little-endian IEEE-754 doubles.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace mvbridge
