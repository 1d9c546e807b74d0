#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace provlab {

// Dense row-major float32 tensor. Rank is whatever the shape says; all the
// models here only ever need rank 1 and 2, so no stride tricks.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape);
    Tensor(std::vector<size_t> shape, std::vector<float> data);

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, float value);
    static Tensor scalar(float value);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t numel() const { return data_.size(); }
    size_t dim(size_t i) const;

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& at(size_t i) { return data_[i]; }
    float at(size_t i) const { return data_[i]; }
    // rank-2 accessors
    float& at(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
    float at(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<size_t> shape_;
    std::vector<float> data_;
};

size_t shape_numel(const std::vector<size_t>& shape);
std::string shape_to_string(const std::vector<size_t>& shape);

// Euclidean norm with double accumulation.
double l2_norm(const std::vector<float>& v);
// ||a-b||_2 / max(||a||, ||b||, eps); the relative-error yardstick used by
// the gradient checks.
double rel_error(const std::vector<float>& a, const std::vector<float>& b,
                 double eps = 1e-12);

}  // namespace provlab
