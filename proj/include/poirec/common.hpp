#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace poirec {

// Error categories map onto CLI exit codes: ConfigError -> 1, DataError -> 2,
// DivergenceError -> 3. ShapeError signals a broken internal contract.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::logic_error {
    explicit ShapeError(const std::string& msg) : std::logic_error(msg) {}
};

struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Deterministic RNG. mt19937_64 has a fully specified output sequence; the
// distribution helpers are hand-rolled so results are identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return state_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(state_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; one value per call, spare discarded to keep call sites
    // order-independent.
    double normal(double mean, double stddev) {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n). Modulo bias is irrelevant at the scales used.
    std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : state_() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 state_;
};

// Min-max normalization to [0, 1]; a constant range maps to 0.5.
inline double minmax_norm(double x, double lo, double hi) {
    if (hi - lo <= 0.0) return 0.5;
    return (x - lo) / (hi - lo);
}

}  // namespace poirec
