#include "kou2d/kou_model.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kou2d {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(std::string("invalid Kou parameters: ") + what);
    }
}

}  // namespace

void KouParams::validate() const {
    require(std::isfinite(sigma1) && sigma1 > 0.0, "sigma1 must be > 0");
    require(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be > 0");
    require(std::isfinite(r), "r must be finite");
    require(std::isfinite(rho) && std::abs(rho) <= 1.0, "|rho| must be <= 1");
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
    require(p1 >= 0.0 && p1 <= 1.0, "p1 must lie in [0,1]");
    require(p2 >= 0.0 && p2 <= 1.0, "p2 must lie in [0,1]");
    require(std::isfinite(eta_p1) && eta_p1 > 1.0, "eta_p1 must be > 1");
    require(std::isfinite(eta_p2) && eta_p2 > 1.0, "eta_p2 must be > 1");
    require(std::isfinite(eta_q1) && eta_q1 > 0.0, "eta_q1 must be > 0");
    require(std::isfinite(eta_q2) && eta_q2 > 0.0, "eta_q2 must be > 0");
    require(std::isfinite(K) && K > 0.0, "K must be > 0");
    require(std::isfinite(T) && T > 0.0, "T must be > 0");
}

std::uint64_t KouParams::fingerprint() const {
    const double fields[] = {sigma1, sigma2, r, rho, lambda, p1, p2,
                             eta_p1, eta_q1, eta_p2, eta_q2, K, T};
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double f : fields) {
        auto bits = std::bit_cast<std::uint64_t>(f);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

double expected_relative_jump_size(double p, double eta_p, double eta_q) {
    if (!(eta_p > 1.0)) {
        throw std::invalid_argument("expected_relative_jump_size: eta_p must be > 1");
    }
    if (!(eta_q > 0.0)) {
        throw std::invalid_argument("expected_relative_jump_size: eta_q must be > 0");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("expected_relative_jump_size: p must lie in [0,1]");
    }
    const double q = 1.0 - p;
    return p * eta_p / (eta_p - 1.0) + q * eta_q / (eta_q + 1.0) - 1.0;
}

double jump_density_1d(double y, double p, double eta_p, double eta_q) {
    if (!(y > 0.0)) {
        throw std::invalid_argument("jump_density: y must be > 0");
    }
    if (y >= 1.0) {
        return p * eta_p * std::pow(y, -eta_p - 1.0);
    }
    return (1.0 - p) * eta_q * std::pow(y, eta_q - 1.0);
}

double jump_density(double y1, double y2, const KouParams& params) {
    return jump_density_1d(y1, params.p1, params.eta_p1, params.eta_q1) *
           jump_density_1d(y2, params.p2, params.eta_p2, params.eta_q2);
}

KouModel::KouModel(const KouParams& params) : params_(params) {
    params_.validate();
    moments_.zeta1 = expected_relative_jump_size(params_.p1, params_.eta_p1, params_.eta_q1);
    moments_.zeta2 = expected_relative_jump_size(params_.p2, params_.eta_p2, params_.eta_q2);
}

}  // namespace kou2d
