#ifndef CLARITY_TENSOR_HPP
#define CLARITY_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace clarity {

// Dense row-major tensor of doubles. Images are (3,H,W), activation batches
// (N,C,H,W), feature batches (N,C), vectors (C) and scalars {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, double fill);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  // Value of a one-element tensor.
  double item() const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(double v);
  bool all_finite() const;
  double min() const;
  double max() const;
  double mean() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace clarity

#endif
