#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fuseq {

/// Error type thrown on contract violations (bad inputs, invalid networks,
/// malformed scenarios). Carries a human-readable message only.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

/// Neumaier-compensated accumulator. Probability masses are accumulated
/// across up to millions of path atoms; plain summation can drift past the
/// 1e-9 normalization budget at that scale.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// SplitMix64 step; used to derive independent per-shard RNG seeds from a
/// master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace fuseq
