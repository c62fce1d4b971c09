#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "poirec/nn/tensor.hpp"

namespace poirec::nn {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    Tape* tape = nullptr;
    int idx = -1;
};

// Reverse-mode tape over dense double tensors. Operations append nodes in
// topological order; backward() replays them in reverse, accumulating into
// each reached Parameter's gradient.
class Tape {
public:
    Var constant(Tensor value);
    Var param(Parameter& p);  // one node per Parameter, reused across calls

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.idx)].value; }
    const Tensor& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.idx)].grad; }

    // Seeds d(scalar)/d(scalar) = 1 and propagates to every reached node and
    // Parameter. The source must be a [1,1] tensor.
    void backward(Var scalar);

    std::size_t size() const { return nodes_.size(); }

    // --- primitive operations -------------------------------------------
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);                  // identical shapes
    Var add_row(Var m, Var r);              // [m,n] + [1,n] broadcast over rows
    Var scale(Var a, double c);
    Var mul_const(Var a, const Tensor& m);  // elementwise by a constant mask
    Var relu(Var a);
    Var leaky_relu(Var a, double slope);    // slope also used at exactly 0
    Var sin(Var a);
    Var concat(Var a, Var b, int axis);     // 0 = stack rows, 1 = side by side
    Var slice_cols(Var a, std::int64_t c0, std::int64_t c1);
    Var stack_rows(const std::vector<Var>& rows);  // column vectors -> matrix rows
    Var gather_rows(Var m, std::vector<std::int64_t> indices);
    Var softmax_rows(Var a, const Tensor* mask = nullptr);  // mask entries !=0 kept
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
    Var select_rows(const std::vector<bool>& take_a, Var a, Var b);
    Var sum_all(Var a);
    // Mean negative log-likelihood of softmax(logits) rows at `targets`,
    // averaged over rows where mask != 0. Targets of masked rows are ignored.
    Var cross_entropy_masked(Var logits, const std::vector<std::int64_t>& targets,
                             const std::vector<double>& mask);
    // Mean squared error over unmasked rows of a [k,1] prediction.
    Var mse_masked(Var pred, const std::vector<double>& targets,
                   const std::vector<double>& mask);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, const Tensor&)> backward;  // pull upstream grad into parents
        Parameter* sink = nullptr;
    };

    int push(Tensor value, std::function<void(Tape&, const Tensor&)> backward);
    Tensor& grad_mut(int idx) { return nodes_[static_cast<std::size_t>(idx)].grad; }
    const Tensor& val(int idx) const { return nodes_[static_cast<std::size_t>(idx)].value; }
    Var check(Var v) const;

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> param_nodes_;
};

// --- convenience free functions ------------------------------------------
inline Var matmul(Var a, Var b) { return a.tape->matmul(a, b); }
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator*(double c, Var a) { return a.tape->scale(a, c); }

}  // namespace poirec::nn
