#include "poirec/nn/tensor.hpp"

#include <cmath>

#include "poirec/common.hpp"

namespace poirec::nn {

Tensor::Tensor(std::int64_t rows, std::int64_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != rows * cols) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape [" + std::to_string(rows) + "," +
                         std::to_string(cols) + "]");
    }
}

Tensor Tensor::full(std::int64_t rows, std::int64_t cols, double value) {
    Tensor t(rows, cols);
    t.fill(value);
    return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
    return Tensor(1, static_cast<std::int64_t>(values.size()), std::vector<double>(values));
}

Tensor Tensor::column(std::initializer_list<double> values) {
    return Tensor(static_cast<std::int64_t>(values.size()), 1, std::vector<double>(values));
}

Tensor Tensor::identity(std::int64_t n) {
    Tensor t(n, n);
    for (std::int64_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str());
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double value) {
    for (double& v : data_) v = value;
}

std::string Tensor::shape_str() const {
    return "[" + std::to_string(rows_) + "," + std::to_string(cols_) + "]";
}

}  // namespace poirec::nn
