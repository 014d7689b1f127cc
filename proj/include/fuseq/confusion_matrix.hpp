#pragma once

#include <vector>

#include "fuseq/common.hpp"

namespace fuseq {

/// Column tolerance for stochasticity checks.
inline constexpr double kColumnSumTol = 1e-12;

/// Column-stochastic conditional probability table P(output = i | H = h).
/// Column h holds the output distribution of a sensor (or fused system)
/// when the true hypothesis is h. The atom of both the static and the
/// dynamic layer.
class ConfusionMatrix {
public:
    /// entries is row-major: entries[i * m + h] = P(output = i | H = h).
    /// Every entry must lie in [0,1] and each column must sum to 1
    /// within kColumnSumTol.
    ConfusionMatrix(int m, std::vector<double> entries);

    /// 2x2 matrix from a (false alarm, detection) pair:
    /// P(out=1|H=0) = pf, P(out=1|H=1) = pd.
    static ConfusionMatrix binary(double pf, double pd);

    int size() const { return m_; }

    /// P(output = out | H = h)
    double operator()(int out, int h) const { return p_[static_cast<size_t>(out) * m_ + h]; }

    /// False alarm probability P(out=1|H=0); binary matrices only.
    double pf() const;
    /// Detection probability P(out=1|H=1); binary matrices only.
    double pd() const;

    bool approx_equal(const ConfusionMatrix& other, double tol) const;

private:
    int m_;
    std::vector<double> p_;
};

}  // namespace fuseq
