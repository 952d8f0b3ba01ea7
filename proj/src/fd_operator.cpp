#include "kou2d/fd_operator.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace kou2d {

StencilWeights central_weights(double hL, double hR, int order) {
    if (!(hL > 0.0) || !(hR > 0.0)) {
        throw std::invalid_argument("central_weights: spacings must be positive");
    }
    if (order == 1) {
        return {-hR / (hL * (hL + hR)), (hR - hL) / (hL * hR), hL / (hR * (hL + hR))};
    }
    if (order == 2) {
        return {2.0 / (hL * (hL + hR)), -2.0 / (hL * hR), 2.0 / (hR * (hL + hR))};
    }
    throw std::invalid_argument("central_weights: order must be 1 or 2");
}

StencilWeights lagrange3_weights(double x, double x0, double x1, double x2, int order) {
    const double d0 = (x0 - x1) * (x0 - x2);
    const double d1 = (x1 - x0) * (x1 - x2);
    const double d2 = (x2 - x0) * (x2 - x1);
    if (order == 1) {
        return {((x - x1) + (x - x2)) / d0, ((x - x0) + (x - x2)) / d1, ((x - x0) + (x - x1)) / d2};
    }
    if (order == 2) {
        return {2.0 / d0, 2.0 / d1, 2.0 / d2};
    }
    throw std::invalid_argument("lagrange3_weights: order must be 1 or 2");
}

SparseMatrix assemble_ad(const SpatialGrid& grid, const KouModel& model) {
    const KouParams& p = model.params();
    const JumpMoments& mom = model.moments();
    const std::size_t n = grid.points_per_dim();
    const std::size_t M = grid.size();
    const auto& s = grid.nodes;

    // 3x3 local stencil per row, offsets (di, dj) in {-1,0,1}; emitted in column order.
    constexpr std::size_t kSlots = 9;
    std::vector<std::array<double, kSlots>> local(M);
    std::vector<std::array<bool, kSlots>> used(M);
    auto slot = [](int di, int dj) { return static_cast<std::size_t>((dj + 1) * 3 + (di + 1)); };

    const double reaction = -(p.r + p.lambda);
    const double drift1 = p.r - p.lambda * mom.zeta1;
    const double drift2 = p.r - p.lambda * mom.zeta2;

    const auto rows = static_cast<std::ptrdiff_t>(M);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t l = 0; l < rows; ++l) {
        auto& w = local[l];
        auto& u = used[l];
        w.fill(0.0);
        u.fill(false);
        const std::size_t i = static_cast<std::size_t>(l) % n;
        const std::size_t j = static_cast<std::size_t>(l) / n;
        if (grid.is_far_boundary(i, j)) continue;

        auto add = [&](int di, int dj, double v) {
            w[slot(di, dj)] += v;
            u[slot(di, dj)] = true;
        };
        add(0, 0, reaction);

        const double s1 = s[i];
        const double s2 = s[j];
        StencilWeights d1x{}, d2x{}, d1y{}, d2y{};
        if (i > 0) {
            d1x = central_weights(s[i] - s[i - 1], s[i + 1] - s[i], 1);
            d2x = central_weights(s[i] - s[i - 1], s[i + 1] - s[i], 2);
            const double a = 0.5 * p.sigma1 * p.sigma1 * s1 * s1;
            const double b = drift1 * s1;
            add(-1, 0, a * d2x.left + b * d1x.left);
            add(0, 0, a * d2x.centre + b * d1x.centre);
            add(1, 0, a * d2x.right + b * d1x.right);
        }
        if (j > 0) {
            d1y = central_weights(s[j] - s[j - 1], s[j + 1] - s[j], 1);
            d2y = central_weights(s[j] - s[j - 1], s[j + 1] - s[j], 2);
            const double a = 0.5 * p.sigma2 * p.sigma2 * s2 * s2;
            const double b = drift2 * s2;
            add(0, -1, a * d2y.left + b * d1y.left);
            add(0, 0, a * d2y.centre + b * d1y.centre);
            add(0, 1, a * d2y.right + b * d1y.right);
        }
        if (i > 0 && j > 0 && p.rho != 0.0) {
            const double c = p.rho * p.sigma1 * p.sigma2 * s1 * s2;
            const double wx[3] = {d1x.left, d1x.centre, d1x.right};
            const double wy[3] = {d1y.left, d1y.centre, d1y.right};
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    const double v = c * wx[di + 1] * wy[dj + 1];
                    if (v != 0.0) add(di, dj, v);
                }
            }
        }
    }

    SparseMatrix A;
    A.rows = A.cols = M;
    A.row_ptr.assign(M + 1, 0);
    for (std::size_t l = 0; l < M; ++l) {
        std::size_t count = 0;
        for (bool b : used[l]) count += b ? 1 : 0;
        A.row_ptr[l + 1] = A.row_ptr[l] + count;
    }
    A.col.resize(A.row_ptr[M]);
    A.val.resize(A.row_ptr[M]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t l = 0; l < rows; ++l) {
        const std::size_t i = static_cast<std::size_t>(l) % n;
        const std::size_t j = static_cast<std::size_t>(l) / n;
        std::size_t pos = A.row_ptr[l];
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const std::size_t k = slot(di, dj);
                if (!used[l][k]) continue;
                A.col[pos] = grid.index(i + di, j + dj);
                A.val[pos] = local[l][k];
                ++pos;
            }
        }
    }
    return A;
}

}  // namespace kou2d
