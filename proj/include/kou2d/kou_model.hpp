#pragma once

#include <cstdint>

namespace kou2d {

/// Model and contract parameters of the two-asset Kou jump-diffusion.
/// Defaults are the standard test parameter set.
struct KouParams {
    double sigma1 = 0.30;
    double sigma2 = 0.40;
    double r = 0.01;
    double rho = 0.50;
    double lambda = 0.50;
    double p1 = 0.40;
    double p2 = 0.60;
    double eta_p1 = 1.0 / 0.20;
    double eta_q1 = 1.0 / 0.15;
    double eta_p2 = 1.0 / 0.18;
    double eta_q2 = 1.0 / 0.14;
    double K = 100.0;
    double T = 0.5;

    double q1() const { return 1.0 - p1; }
    double q2() const { return 1.0 - p2; }

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;

    /// Stable 64-bit fingerprint of all fields (FNV-1a over the IEEE bit patterns).
    std::uint64_t fingerprint() const;
};

struct JumpMoments {
    double zeta1 = 0.0;
    double zeta2 = 0.0;
};

/// E[Y] - 1 for a log-double-exponential relative jump Y.
double expected_relative_jump_size(double p, double eta_p, double eta_q);

/// One-dimensional log-double-exponential density of the relative jump y > 0.
/// y >= 1 selects the upward (eta_p) branch.
double jump_density_1d(double y, double p, double eta_p, double eta_q);

/// Joint density of the two independent relative jumps.
double jump_density(double y1, double y2, const KouParams& params);

/// Validated parameter set together with its derived jump moments.
/// Everything downstream takes a KouModel, never raw KouParams.
class KouModel {
public:
    explicit KouModel(const KouParams& params);

    const KouParams& params() const { return params_; }
    const JumpMoments& moments() const { return moments_; }

private:
    KouParams params_;
    JumpMoments moments_;
};

}  // namespace kou2d
