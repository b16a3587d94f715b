#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace pdiff {

using Vec = Eigen::ArrayXd;   // 1-D value arrays (samples, counts, losses)
using Mat = Eigen::MatrixXd;  // batches (rows = samples) and weight matrices

/// Histogram of integer-valued samples over the support 0..K.
/// `counts[k]` holds the number of samples equal to k; samples above K are
/// tallied in `overflow` and excluded from the in-support mass.
struct EmpiricalPmf {
    Eigen::ArrayXi counts;     // length K+1
    std::int64_t n = 0;        // total samples, including overflow
    int K = 0;
    std::int64_t overflow = 0;

    Vec probs() const {
        return counts.cast<double>() / static_cast<double>(n);
    }
};

}  // namespace pdiff
