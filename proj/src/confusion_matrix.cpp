#include "fuseq/confusion_matrix.hpp"

#include <cmath>
#include <string>

namespace fuseq {

ConfusionMatrix::ConfusionMatrix(int m, std::vector<double> entries)
    : m_(m), p_(std::move(entries)) {
    require(m_ >= 2, "confusion matrix: decision-space size must be >= 2, got " + std::to_string(m_));
    require(p_.size() == static_cast<size_t>(m_) * m_,
            "confusion matrix: expected " + std::to_string(m_ * m_) + " entries, got " +
                std::to_string(p_.size()));
    for (double v : p_) {
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                "confusion matrix: entry " + std::to_string(v) + " outside [0,1]");
    }
    for (int h = 0; h < m_; ++h) {
        double col = 0.0;
        for (int i = 0; i < m_; ++i) col += (*this)(i, h);
        require(std::abs(col - 1.0) <= kColumnSumTol,
                "confusion matrix: column " + std::to_string(h) + " sums to " +
                    std::to_string(col) + ", expected 1");
    }
}

ConfusionMatrix ConfusionMatrix::binary(double pf, double pd) {
    return ConfusionMatrix(2, {1.0 - pf, 1.0 - pd, pf, pd});
}

double ConfusionMatrix::pf() const {
    require(m_ == 2, "pf() requires a binary matrix");
    return (*this)(1, 0);
}

double ConfusionMatrix::pd() const {
    require(m_ == 2, "pd() requires a binary matrix");
    return (*this)(1, 1);
}

bool ConfusionMatrix::approx_equal(const ConfusionMatrix& other, double tol) const {
    if (m_ != other.m_) return false;
    for (size_t i = 0; i < p_.size(); ++i) {
        if (std::abs(p_[i] - other.p_[i]) > tol) return false;
    }
    return true;
}

}  // namespace fuseq
