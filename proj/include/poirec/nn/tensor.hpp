#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace poirec::nn {

// Dense 2-D double tensor, row-major. Scalars are [1,1], column vectors
// [n,1], row vectors [1,n].
class Tensor {
public:
    Tensor() = default;
    Tensor(std::int64_t rows, std::int64_t cols)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), 0.0) {}
    Tensor(std::int64_t rows, std::int64_t cols, std::vector<double> data);

    static Tensor zeros(std::int64_t rows, std::int64_t cols) { return Tensor(rows, cols); }
    static Tensor full(std::int64_t rows, std::int64_t cols, double value);
    static Tensor scalar(double value) { return full(1, 1, value); }
    static Tensor row(std::initializer_list<double> values);
    static Tensor column(std::initializer_list<double> values);
    static Tensor identity(std::int64_t n);

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::int64_t numel() const { return rows_ * cols_; }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double item() const;  // value of a [1,1] tensor

    bool all_finite() const;
    void fill(double value);
    std::string shape_str() const;

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<double> data_;
};

// Trainable value with an accumulated gradient of identical shape.
struct Parameter {
    Tensor value;
    Tensor gradient;
    std::string name;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : value(std::move(v)), gradient(value.rows(), value.cols()), name(std::move(n)) {}

    void zero_grad() { gradient.fill(0.0); }
};

}  // namespace poirec::nn
