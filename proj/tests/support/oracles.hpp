#pragma once

#include <cstdint>
#include <vector>

#include "poirec/model.hpp"
#include "poirec/nn/tensor.hpp"
#include "poirec/popularity.hpp"

namespace poirec::testsupport {

// Popularity score in distributed form: the four weighted terms are summed
// independently instead of factoring out beta, so the arithmetic path
// differs from the library's.
double oracle_popularity(const PopularityCounts& c, double alpha, double beta);

// Rank by sorting (score descending, index ascending) and locating the
// target's position, 1-based.
std::int64_t oracle_rank(const std::vector<double>& scores, std::int64_t target);

double oracle_acc_at_k(const std::vector<std::int64_t>& ranks, std::int64_t k);
double oracle_mrr(const std::vector<std::int64_t>& ranks);

// Largest absolute eigenvalue of a symmetric matrix by power iteration.
double oracle_spectral_radius(const nn::Tensor& m, int iters = 300, std::uint64_t seed = 1);

// Longhand transformer-encoder forward in plain loops, no tape: positional
// table added to x0, then per layer a shared masked attention matrix, the
// value projection split across heads, the output projection, and the two
// add-and-normalize blocks around the feed-forward. Reads current parameter
// values from the model.
nn::Tensor oracle_encoder_forward(const nn::Tensor& x0, GetNextModel& model,
                                  const nn::Tensor& attn_mask);

}  // namespace poirec::testsupport
