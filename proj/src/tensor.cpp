#include "provlab/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace provlab {

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0f) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
        throw std::invalid_argument("tensor data size " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::zeros(std::vector<size_t> shape) {
    return Tensor(std::move(shape));
}

Tensor Tensor::full(std::vector<size_t> shape, float value) {
    Tensor t(std::move(shape));
    for (float& x : t.data_) x = value;
    return t;
}

Tensor Tensor::scalar(float value) {
    Tensor t(std::vector<size_t>{});
    t.data_.assign(1, value);
    return t;
}

size_t Tensor::dim(size_t i) const {
    if (i >= shape_.size()) {
        throw std::out_of_range("dim " + std::to_string(i) + " out of range for shape " +
                                shape_to_string(shape_));
    }
    return shape_[i];
}

bool Tensor::all_finite() const {
    for (float x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    return shape_to_string(shape_);
}

double l2_norm(const std::vector<float>& v) {
    double acc = 0.0;
    for (float x : v) acc += double(x) * double(x);
    return std::sqrt(acc);
}

double rel_error(const std::vector<float>& a, const std::vector<float>& b, double eps) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("rel_error: size mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    }
    double diff = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - double(b[i]);
        diff += d * d;
    }
    double na = l2_norm(a);
    double nb = l2_norm(b);
    double denom = std::max(std::max(na, nb), eps);
    return std::sqrt(diff) / denom;
}

}  // namespace provlab
