#include "poirec/nn/tape.hpp"

#include <cmath>
#include <utility>

#include "poirec/common.hpp"

namespace poirec::nn {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace

int Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> backward) {
    Node n;
    n.grad = Tensor(value.rows(), value.cols());
    n.value = std::move(value);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::check(Var v) const {
    if (v.tape != this || v.idx < 0 || v.idx >= static_cast<int>(nodes_.size())) {
        throw ShapeError("var does not belong to this tape");
    }
    return v;
}

Var Tape::constant(Tensor value) {
    return Var{this, push(std::move(value), nullptr)};
}

Var Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var{this, it->second};
    int idx = push(p.value, nullptr);
    nodes_[static_cast<std::size_t>(idx)].sink = &p;
    param_nodes_[&p] = idx;
    return Var{this, idx};
}

void Tape::backward(Var scalar) {
    check(scalar);
    const Tensor& v = val(scalar.idx);
    require(v.numel() == 1, "backward source must be a scalar, got " + v.shape_str());
    grad_mut(scalar.idx)[0] += 1.0;
    for (int i = scalar.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.backward) n.backward(*this, n.grad);
        if (n.sink) {
            auto& dst = n.sink->gradient.data();
            const auto& src = n.grad.data();
            for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        }
    }
}

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    require(ta.cols() == tb.rows(), "matmul shape mismatch " + ta.shape_str() + " x " + tb.shape_str());
    const std::int64_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out(m, n);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = ta.at(i, p);
            if (av == 0.0) continue;
            for (std::int64_t j = 0; j < n; ++j) out.at(i, j) += av * tb.at(p, j);
        }
    }
    int ai = a.idx, bi = b.idx;
    int idx = push(std::move(out), [ai, bi, m, k, n](Tape& t, const Tensor& g) {
        const Tensor& A = t.val(ai);
        const Tensor& B = t.val(bi);
        Tensor& ga = t.grad_mut(ai);
        Tensor& gb = t.grad_mut(bi);
        // dA = G B^T, dB = A^T G
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j) {
                const double gv = g.at(i, j);
                if (gv == 0.0) continue;
                for (std::int64_t p = 0; p < k; ++p) {
                    ga.at(i, p) += gv * B.at(p, j);
                    gb.at(p, j) += A.at(i, p) * gv;
                }
            }
    });
    return Var{this, idx};
}

Var Tape::transpose(Var a) {
    check(a);
    const Tensor& ta = val(a.idx);
    Tensor out(ta.cols(), ta.rows());
    for (std::int64_t i = 0; i < ta.rows(); ++i)
        for (std::int64_t j = 0; j < ta.cols(); ++j) out.at(j, i) = ta.at(i, j);
    int ai = a.idx;
    int idx = push(std::move(out), [ai](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < g.rows(); ++i)
            for (std::int64_t j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
    });
    return Var{this, idx};
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    require(ta.same_shape(tb), "add shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Tensor out = ta;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    int ai = a.idx, bi = b.idx;
    int idx = push(std::move(out), [ai, bi](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        Tensor& gb = t.grad_mut(bi);
        for (std::int64_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
    return Var{this, idx};
}

Var Tape::add_row(Var m, Var r) {
    check(m);
    check(r);
    const Tensor& tm = val(m.idx);
    const Tensor& tr = val(r.idx);
    require(tr.rows() == 1 && tr.cols() == tm.cols(),
            "add_row shape mismatch " + tm.shape_str() + " vs " + tr.shape_str());
    Tensor out = tm;
    for (std::int64_t i = 0; i < tm.rows(); ++i)
        for (std::int64_t j = 0; j < tm.cols(); ++j) out.at(i, j) += tr.at(0, j);
    int mi = m.idx, ri = r.idx;
    int idx = push(std::move(out), [mi, ri](Tape& t, const Tensor& g) {
        Tensor& gm = t.grad_mut(mi);
        Tensor& gr = t.grad_mut(ri);
        for (std::int64_t i = 0; i < g.rows(); ++i)
            for (std::int64_t j = 0; j < g.cols(); ++j) {
                gm.at(i, j) += g.at(i, j);
                gr.at(0, j) += g.at(i, j);
            }
    });
    return Var{this, idx};
}

Var Tape::scale(Var a, double c) {
    check(a);
    Tensor out = val(a.idx);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
    int ai = a.idx;
    int idx = push(std::move(out), [ai, c](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += c * g[i];
    });
    return Var{this, idx};
}

Var Tape::mul_const(Var a, const Tensor& m) {
    check(a);
    const Tensor& ta = val(a.idx);
    require(ta.same_shape(m), "mul_const shape mismatch " + ta.shape_str() + " vs " + m.shape_str());
    Tensor out = ta;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= m[i];
    int ai = a.idx;
    Tensor mask = m;
    int idx = push(std::move(out), [ai, mask](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += mask[i] * g[i];
    });
    return Var{this, idx};
}

Var Tape::relu(Var a) { return leaky_relu(a, 0.0); }

Var Tape::leaky_relu(Var a, double slope) {
    check(a);
    const Tensor& ta = val(a.idx);
    Tensor out = ta;
    for (std::int64_t i = 0; i < out.numel(); ++i)
        if (out[i] <= 0.0) out[i] *= slope;
    int ai = a.idx;
    int idx = push(std::move(out), [ai, slope](Tape& t, const Tensor& g) {
        const Tensor& x = t.val(ai);
        Tensor& ga = t.grad_mut(ai);
        // subgradient at exactly 0 uses the negative-side slope
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += (x[i] > 0.0 ? 1.0 : slope) * g[i];
    });
    return Var{this, idx};
}

Var Tape::sin(Var a) {
    check(a);
    const Tensor& ta = val(a.idx);
    Tensor out = ta;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::sin(out[i]);
    int ai = a.idx;
    int idx = push(std::move(out), [ai](Tape& t, const Tensor& g) {
        const Tensor& x = t.val(ai);
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += std::cos(x[i]) * g[i];
    });
    return Var{this, idx};
}

Var Tape::concat(Var a, Var b, int axis) {
    check(a);
    check(b);
    require(axis == 0 || axis == 1, "concat axis must be 0 or 1");
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    int ai = a.idx, bi = b.idx;
    if (axis == 0) {
        require(ta.cols() == tb.cols(),
                "concat axis 0 column mismatch " + ta.shape_str() + " vs " + tb.shape_str());
        Tensor out(ta.rows() + tb.rows(), ta.cols());
        for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i];
        for (std::int64_t i = 0; i < tb.numel(); ++i) out[ta.numel() + i] = tb[i];
        const std::int64_t na = ta.numel();
        int idx = push(std::move(out), [ai, bi, na](Tape& t, const Tensor& g) {
            Tensor& ga = t.grad_mut(ai);
            Tensor& gb = t.grad_mut(bi);
            for (std::int64_t i = 0; i < na; ++i) ga[i] += g[i];
            for (std::int64_t i = 0; i < gb.numel(); ++i) gb[i] += g[na + i];
        });
        return Var{this, idx};
    }
    require(ta.rows() == tb.rows(),
            "concat axis 1 row mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Tensor out(ta.rows(), ta.cols() + tb.cols());
    for (std::int64_t i = 0; i < ta.rows(); ++i) {
        for (std::int64_t j = 0; j < ta.cols(); ++j) out.at(i, j) = ta.at(i, j);
        for (std::int64_t j = 0; j < tb.cols(); ++j) out.at(i, ta.cols() + j) = tb.at(i, j);
    }
    const std::int64_t ca = ta.cols();
    int idx = push(std::move(out), [ai, bi, ca](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        Tensor& gb = t.grad_mut(bi);
        for (std::int64_t i = 0; i < g.rows(); ++i) {
            for (std::int64_t j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
            for (std::int64_t j = 0; j < gb.cols(); ++j) gb.at(i, j) += g.at(i, ca + j);
        }
    });
    return Var{this, idx};
}

Var Tape::slice_cols(Var a, std::int64_t c0, std::int64_t c1) {
    check(a);
    const Tensor& ta = val(a.idx);
    require(0 <= c0 && c0 < c1 && c1 <= ta.cols(), "slice_cols range out of bounds");
    Tensor out(ta.rows(), c1 - c0);
    for (std::int64_t i = 0; i < ta.rows(); ++i)
        for (std::int64_t j = c0; j < c1; ++j) out.at(i, j - c0) = ta.at(i, j);
    int ai = a.idx;
    int idx = push(std::move(out), [ai, c0](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < g.rows(); ++i)
            for (std::int64_t j = 0; j < g.cols(); ++j) ga.at(i, c0 + j) += g.at(i, j);
    });
    return Var{this, idx};
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
    require(!rows.empty(), "stack_rows needs at least one vector");
    const std::int64_t d = val(check(rows[0]).idx).rows();
    for (Var v : rows) {
        check(v);
        const Tensor& tv = val(v.idx);
        require(tv.cols() == 1 && tv.rows() == d,
                "stack_rows expects [d,1] columns, got " + tv.shape_str());
    }
    Tensor out(static_cast<std::int64_t>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Tensor& tv = val(rows[i].idx);
        for (std::int64_t j = 0; j < d; ++j) out.at(static_cast<std::int64_t>(i), j) = tv[j];
    }
    std::vector<int> parents;
    parents.reserve(rows.size());
    for (Var v : rows) parents.push_back(v.idx);
    int idx = push(std::move(out), [parents, d](Tape& t, const Tensor& g) {
        for (std::size_t i = 0; i < parents.size(); ++i) {
            Tensor& gp = t.grad_mut(parents[i]);
            for (std::int64_t j = 0; j < d; ++j) gp[j] += g.at(static_cast<std::int64_t>(i), j);
        }
    });
    return Var{this, idx};
}

Var Tape::gather_rows(Var m, std::vector<std::int64_t> indices) {
    check(m);
    const Tensor& tm = val(m.idx);
    for (std::int64_t r : indices) {
        if (r < 0 || r >= tm.rows()) {
            throw std::out_of_range("gather_rows index " + std::to_string(r) +
                                    " out of range for " + tm.shape_str());
        }
    }
    Tensor out(static_cast<std::int64_t>(indices.size()), tm.cols());
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::int64_t j = 0; j < tm.cols(); ++j)
            out.at(static_cast<std::int64_t>(i), j) = tm.at(indices[i], j);
    int mi = m.idx;
    int idx = push(std::move(out), [mi, indices](Tape& t, const Tensor& g) {
        Tensor& gm = t.grad_mut(mi);
        for (std::size_t i = 0; i < indices.size(); ++i)
            for (std::int64_t j = 0; j < g.cols(); ++j)
                gm.at(indices[i], j) += g.at(static_cast<std::int64_t>(i), j);
    });
    return Var{this, idx};
}

Var Tape::softmax_rows(Var a, const Tensor* mask) {
    check(a);
    const Tensor& ta = val(a.idx);
    if (mask != nullptr) {
        require(ta.same_shape(*mask),
                "softmax mask shape mismatch " + ta.shape_str() + " vs " + mask->shape_str());
    }
    Tensor out(ta.rows(), ta.cols());
    for (std::int64_t i = 0; i < ta.rows(); ++i) {
        double mx = -HUGE_VAL;
        for (std::int64_t j = 0; j < ta.cols(); ++j) {
            if (mask != nullptr && mask->at(i, j) == 0.0) continue;
            mx = std::max(mx, ta.at(i, j));
        }
        if (mx == -HUGE_VAL) throw DomainError("softmax row " + std::to_string(i) + " fully masked");
        double sum = 0.0;
        for (std::int64_t j = 0; j < ta.cols(); ++j) {
            if (mask != nullptr && mask->at(i, j) == 0.0) continue;
            out.at(i, j) = std::exp(ta.at(i, j) - mx);
            sum += out.at(i, j);
        }
        for (std::int64_t j = 0; j < ta.cols(); ++j) {
            if (mask != nullptr && mask->at(i, j) == 0.0) continue;
            out.at(i, j) /= sum;
        }
    }
    int ai = a.idx;
    int self = push(std::move(out), nullptr);
    // ds_i = s_i * (g_i - sum_j g_j s_j), masked entries stay zero
    nodes_[static_cast<std::size_t>(self)].backward = [ai, self](Tape& t, const Tensor& g) {
        const Tensor& s = t.val(self);
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < s.rows(); ++i) {
            double dot = 0.0;
            for (std::int64_t j = 0; j < s.cols(); ++j) dot += g.at(i, j) * s.at(i, j);
            for (std::int64_t j = 0; j < s.cols(); ++j) {
                const double sv = s.at(i, j);
                if (sv != 0.0) ga.at(i, j) += sv * (g.at(i, j) - dot);
            }
        }
    };
    return Var{this, self};
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    check(x);
    check(gain);
    check(bias);
    const Tensor& tx = val(x.idx);
    const Tensor& tg = val(gain.idx);
    const Tensor& tb = val(bias.idx);
    const std::int64_t d = tx.cols();
    require(tg.rows() == 1 && tg.cols() == d && tb.rows() == 1 && tb.cols() == d,
            "layer_norm affine params must be [1," + std::to_string(d) + "]");
    Tensor normalized(tx.rows(), d);
    Tensor inv_sigma(tx.rows(), 1);
    Tensor out(tx.rows(), d);
    for (std::int64_t i = 0; i < tx.rows(); ++i) {
        double mean = 0.0;
        for (std::int64_t j = 0; j < d; ++j) mean += tx.at(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
            const double c = tx.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma.at(i, 0) = is;
        for (std::int64_t j = 0; j < d; ++j) {
            normalized.at(i, j) = (tx.at(i, j) - mean) * is;
            out.at(i, j) = tg.at(0, j) * normalized.at(i, j) + tb.at(0, j);
        }
    }
    int xi = x.idx, gi = gain.idx, bi = bias.idx;
    int idx = push(std::move(out), [xi, gi, bi, normalized, inv_sigma, d](Tape& t, const Tensor& g) {
        const Tensor& tg = t.val(gi);
        Tensor& gx = t.grad_mut(xi);
        Tensor& gg = t.grad_mut(gi);
        Tensor& gb = t.grad_mut(bi);
        for (std::int64_t i = 0; i < g.rows(); ++i) {
            double mean_gh = 0.0, mean_ghy = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
                const double gh = g.at(i, j) * tg.at(0, j);
                mean_gh += gh;
                mean_ghy += gh * normalized.at(i, j);
            }
            mean_gh /= static_cast<double>(d);
            mean_ghy /= static_cast<double>(d);
            const double is = inv_sigma.at(i, 0);
            for (std::int64_t j = 0; j < d; ++j) {
                const double gh = g.at(i, j) * tg.at(0, j);
                gx.at(i, j) += is * (gh - mean_gh - normalized.at(i, j) * mean_ghy);
                gg.at(0, j) += g.at(i, j) * normalized.at(i, j);
                gb.at(0, j) += g.at(i, j);
            }
        }
    });
    return Var{this, idx};
}

Var Tape::select_rows(const std::vector<bool>& take_a, Var a, Var b) {
    check(a);
    check(b);
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    require(ta.same_shape(tb), "select_rows shape mismatch");
    require(static_cast<std::int64_t>(take_a.size()) == ta.rows(), "select_rows flag count mismatch");
    Tensor out(ta.rows(), ta.cols());
    for (std::int64_t i = 0; i < ta.rows(); ++i)
        for (std::int64_t j = 0; j < ta.cols(); ++j)
            out.at(i, j) = take_a[static_cast<std::size_t>(i)] ? ta.at(i, j) : tb.at(i, j);
    int ai = a.idx, bi = b.idx;
    int idx = push(std::move(out), [ai, bi, take_a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        Tensor& gb = t.grad_mut(bi);
        for (std::int64_t i = 0; i < g.rows(); ++i) {
            Tensor& dst = take_a[static_cast<std::size_t>(i)] ? ga : gb;
            for (std::int64_t j = 0; j < g.cols(); ++j) dst.at(i, j) += g.at(i, j);
        }
    });
    return Var{this, idx};
}

Var Tape::sum_all(Var a) {
    check(a);
    const Tensor& ta = val(a.idx);
    double s = 0.0;
    for (std::int64_t i = 0; i < ta.numel(); ++i) s += ta[i];
    int ai = a.idx;
    int idx = push(Tensor::scalar(s), [ai](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_mut(ai);
        for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] += g[0];
    });
    return Var{this, idx};
}

Var Tape::cross_entropy_masked(Var logits, const std::vector<std::int64_t>& targets,
                               const std::vector<double>& mask) {
    check(logits);
    const Tensor& tl = val(logits.idx);
    const std::int64_t k = tl.rows(), n = tl.cols();
    require(static_cast<std::int64_t>(targets.size()) == k &&
                static_cast<std::int64_t>(mask.size()) == k,
            "cross_entropy target/mask length mismatch");
    std::int64_t n_valid = 0;
    for (std::int64_t i = 0; i < k; ++i) {
        if (mask[static_cast<std::size_t>(i)] == 0.0) continue;
        ++n_valid;
        const std::int64_t tgt = targets[static_cast<std::size_t>(i)];
        if (tgt < 0 || tgt >= n) {
            throw std::out_of_range("cross_entropy target " + std::to_string(tgt) +
                                    " out of range for " + std::to_string(n) + " classes");
        }
    }
    if (n_valid == 0) throw DomainError("cross_entropy: all positions masked");
    double total = 0.0;
    for (std::int64_t i = 0; i < k; ++i) {
        if (mask[static_cast<std::size_t>(i)] == 0.0) continue;
        double mx = tl.at(i, 0);
        for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, tl.at(i, j));
        double sum = 0.0;
        for (std::int64_t j = 0; j < n; ++j) sum += std::exp(tl.at(i, j) - mx);
        const double lse = mx + std::log(sum);
        total += lse - tl.at(i, targets[static_cast<std::size_t>(i)]);
    }
    int li = logits.idx;
    int idx = push(Tensor::scalar(total / static_cast<double>(n_valid)),
                   [li, targets, mask, n_valid](Tape& t, const Tensor& g) {
                       const Tensor& x = t.val(li);
                       Tensor& gl = t.grad_mut(li);
                       const double gs = g[0] / static_cast<double>(n_valid);
                       for (std::int64_t i = 0; i < x.rows(); ++i) {
                           if (mask[static_cast<std::size_t>(i)] == 0.0) continue;
                           double mx = x.at(i, 0);
                           for (std::int64_t j = 1; j < x.cols(); ++j) mx = std::max(mx, x.at(i, j));
                           double sum = 0.0;
                           for (std::int64_t j = 0; j < x.cols(); ++j) sum += std::exp(x.at(i, j) - mx);
                           for (std::int64_t j = 0; j < x.cols(); ++j) {
                               double p = std::exp(x.at(i, j) - mx) / sum;
                               if (j == targets[static_cast<std::size_t>(i)]) p -= 1.0;
                               gl.at(i, j) += gs * p;
                           }
                       }
                   });
    return Var{this, idx};
}

Var Tape::mse_masked(Var pred, const std::vector<double>& targets,
                     const std::vector<double>& mask) {
    check(pred);
    const Tensor& tp = val(pred.idx);
    const std::int64_t k = tp.rows();
    require(tp.cols() == 1, "mse_masked expects a [k,1] prediction, got " + tp.shape_str());
    require(static_cast<std::int64_t>(targets.size()) == k &&
                static_cast<std::int64_t>(mask.size()) == k,
            "mse target/mask length mismatch");
    std::int64_t n_valid = 0;
    double total = 0.0;
    for (std::int64_t i = 0; i < k; ++i) {
        if (mask[static_cast<std::size_t>(i)] == 0.0) continue;
        ++n_valid;
        const double diff = tp.at(i, 0) - targets[static_cast<std::size_t>(i)];
        total += diff * diff;
    }
    if (n_valid == 0) throw DomainError("mse: all positions masked");
    int pi = pred.idx;
    int idx = push(Tensor::scalar(total / static_cast<double>(n_valid)),
                   [pi, targets, mask, n_valid](Tape& t, const Tensor& g) {
                       const Tensor& p = t.val(pi);
                       Tensor& gp = t.grad_mut(pi);
                       const double gs = g[0] / static_cast<double>(n_valid);
                       for (std::int64_t i = 0; i < p.rows(); ++i) {
                           if (mask[static_cast<std::size_t>(i)] == 0.0) continue;
                           gp.at(i, 0) += gs * 2.0 * (p.at(i, 0) - targets[static_cast<std::size_t>(i)]);
                       }
                   });
    return Var{this, idx};
}

}  // namespace poirec::nn
