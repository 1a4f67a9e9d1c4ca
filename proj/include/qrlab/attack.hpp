#pragma once

#include <cstdint>
#include <vector>

#include "qrlab/dataset.hpp"
#include "qrlab/net.hpp"

// Untargeted white-box FGSM against a trained (possibly quantized) network.

namespace qrlab::attack {

struct AttackConfig {
    std::vector<double> eps_grid;  // ascending, starting at 0
    bool clip_to_domain = false;   // off in replication mode
    int workers = 1;

    /// The replication grid: 0 to 0.5 in 0.005 increments.
    static std::vector<double> default_grid();
};

/// eps grid from start to stop (inclusive up to rounding) in `step` strides.
std::vector<double> make_eps_grid(double start, double stop, double step);

/// u + eps * sgn(grad_u L(u, label)), gradient taken through the quantized
/// forward pass; sgn(0) = 0.  Optional per-feature box [lo, hi].
std::vector<double> fgsm(const nn::MlpNetwork& net, const double* input, int label,
                         double eps, const double* lo = nullptr, const double* hi = nullptr);

struct SweepCurve {
    std::vector<double> eps;
    std::vector<std::uint64_t> correct;
    std::vector<double> accuracy;
    std::uint64_t total = 0;
};

/// Accuracy under FGSM at every eps in the grid.  The gradient of each test
/// input is computed once and reused across strengths; the eps = 0 entry is
/// the clean accuracy, bit-exact.  Parallel over examples; the result is
/// independent of the worker count.
SweepCurve attack_sweep(const nn::MlpNetwork& net, const data::DatasetSplit& split,
                        const AttackConfig& config);

}  // namespace qrlab::attack
