#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace poirec {

// 1-based rank of `target` with a pessimistic deterministic tie rule: every
// strictly-better score counts, plus every equal score at a smaller index.
// Throws std::out_of_range for a bad target index.
std::int64_t rank_of_target(const std::vector<double>& scores, std::int64_t target);

// Fraction of ranks <= k. Throws DomainError on an empty list, k < 1, or a
// rank < 1.
double acc_at_k(const std::vector<std::int64_t>& ranks, std::int64_t k);

// Mean reciprocal rank. Same error contract as acc_at_k.
double mrr(const std::vector<std::int64_t>& ranks);

struct MetricsReport {
    std::map<std::int64_t, double> acc_at;  // k -> accuracy
    double mrr = 0.0;
    std::int64_t n_samples = 0;
    double alpha = 0.0;  // configuration echo, set by the caller
    double beta = 0.0;

    static const std::vector<std::int64_t>& default_k_list();
};

// Aggregates a rank list into a report (alpha/beta left for the caller).
MetricsReport compute_report(const std::vector<std::int64_t>& ranks,
                             const std::vector<std::int64_t>& k_list);

}  // namespace poirec
