#include "poirec/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "poirec/common.hpp"

namespace poirec::nn {

namespace {

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(1e-8, std::fabs(a) + std::fabs(b));
}

double eval(const ScalarGraphFn& build) {
    Tape tape;
    Var v = build(tape);
    return tape.value(v).item();
}

}  // namespace

double gradient_check(const ScalarGraphFn& build, const std::vector<Parameter*>& params,
                      double h, int sample_per_param, std::uint64_t seed) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        Var loss = build(tape);
        tape.backward(loss);
    }

    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double worst = 0.0;
    for (Parameter* p : params) {
        const std::int64_t n = p->value.numel();
        std::vector<std::int64_t> coords;
        if (n <= sample_per_param) {
            coords.resize(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
        } else {
            std::vector<std::int64_t> all(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
            rng.shuffle(all);
            coords.assign(all.begin(), all.begin() + sample_per_param);
        }
        for (std::int64_t c : coords) {
            const double saved = p->value[c];
            p->value[c] = saved + h;
            const double fp = eval(build);
            p->value[c] = saved - h;
            const double fm = eval(build);
            p->value[c] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            worst = std::max(worst, rel_err(p->gradient[c], fd));
        }
    }
    return worst;
}

}  // namespace poirec::nn
