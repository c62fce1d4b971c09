#pragma once

#include <vector>

#include "poirec/nn/tensor.hpp"

namespace poirec::nn {

// Adaptive per-coordinate moment estimation with bias correction.
class Adam {
public:
    Adam(std::vector<Parameter*> params, double learning_rate, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8);

    // Applies one update from the accumulated gradients.
    void step();
    void zero_grad();

private:
    std::vector<Parameter*> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
};

}  // namespace poirec::nn
