#include "poirec/metrics.hpp"

#include <stdexcept>
#include <string>

#include "poirec/common.hpp"

namespace poirec {

std::int64_t rank_of_target(const std::vector<double>& scores, std::int64_t target) {
    const std::int64_t n = static_cast<std::int64_t>(scores.size());
    if (n < 1) throw DomainError("rank_of_target: empty score list");
    if (target < 0 || target >= n) {
        throw std::out_of_range("rank_of_target: target " + std::to_string(target) +
                                " outside [0, " + std::to_string(n) + ")");
    }
    const double s = scores[static_cast<std::size_t>(target)];
    std::int64_t rank = 1;
    for (std::int64_t j = 0; j < n; ++j) {
        const double v = scores[static_cast<std::size_t>(j)];
        if (v > s || (v == s && j < target)) ++rank;
    }
    return rank;
}

namespace {

void check_ranks(const std::vector<std::int64_t>& ranks) {
    if (ranks.empty()) throw DomainError("metrics: empty rank list");
    for (std::int64_t r : ranks) {
        if (r < 1) throw DomainError("metrics: rank " + std::to_string(r) + " < 1");
    }
}

}  // namespace

double acc_at_k(const std::vector<std::int64_t>& ranks, std::int64_t k) {
    check_ranks(ranks);
    if (k < 1) throw DomainError("acc_at_k: k must be >= 1");
    std::int64_t hits = 0;
    for (std::int64_t r : ranks) hits += (r <= k) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr(const std::vector<std::int64_t>& ranks) {
    check_ranks(ranks);
    double sum = 0.0;
    for (std::int64_t r : ranks) sum += 1.0 / static_cast<double>(r);
    return sum / static_cast<double>(ranks.size());
}

const std::vector<std::int64_t>& MetricsReport::default_k_list() {
    static const std::vector<std::int64_t> k_list = {1, 5, 10, 20};
    return k_list;
}

MetricsReport compute_report(const std::vector<std::int64_t>& ranks,
                             const std::vector<std::int64_t>& k_list) {
    MetricsReport report;
    for (std::int64_t k : k_list) report.acc_at[k] = acc_at_k(ranks, k);
    report.mrr = mrr(ranks);
    report.n_samples = static_cast<std::int64_t>(ranks.size());
    return report;
}

}  // namespace poirec
