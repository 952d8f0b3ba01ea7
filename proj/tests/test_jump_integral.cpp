#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <stdexcept>

#include "kou2d/jump_integral.hpp"

using namespace kou2d;

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// int_0^R y f(y) dy for the 1D Kou density, R >= 1
double truncated_first_moment(double p, double ep, double eq, double R) {
    return (1.0 - p) * eq / (eq + 1.0) + p * ep / (ep - 1.0) * (1.0 - std::pow(R, 1.0 - ep));
}

// int_0^R f(y) dy, R >= 1
double truncated_mass(double p, double ep, double R) {
    return (1.0 - p) + p * (1.0 - std::pow(R, -ep));
}

}  // namespace

TEST(CellPowerWeights, MatchAdaptiveQuadrature) {
    using boost::math::quadrature::gauss_kronrod;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> left(0.5, 400.0), width(0.01, 30.0);
    for (double beta : {6.67, 7.67, -5.0, -4.0, 2.5, -1.7}) {
        for (int t = 0; t < 20; ++t) {
            const double a = left(rng), b = a + width(rng), h = b - a;
            const auto w = cell_power_weights(a, b, beta);
            // local coordinate x in [0,1] keeps the hat factors exact
            const auto integrate = [&](auto hat) {
                return gauss_kronrod<double, 31>::integrate(
                    [&](double x) { return std::pow(a + h * x, beta - 1.0) * hat(x) * h; }, 0.0, 1.0, 20, 1e-15);
            };
            const double lo = integrate([](double x) { return 1.0 - x; });
            const double hi = integrate([](double x) { return x; });
            EXPECT_NEAR(w.lo, lo, 1e-12 * std::abs(lo)) << beta << " " << a << " " << b;
            EXPECT_NEAR(w.hi, hi, 1e-12 * std::abs(hi)) << beta << " " << a << " " << b;
        }
    }
}

TEST(CellPowerWeights, TinyCellsKeepFullPrecision) {
    // relative width 1e-9: the series branch must agree with the symmetric midpoint limit
    const double a = 100.0, b = 100.0 + 1e-7, beta = -5.0;
    const auto w = cell_power_weights(a, b, beta);
    const double mid = std::pow(0.5 * (a + b), beta - 1.0) * (b - a) / 2.0;
    EXPECT_NEAR(w.lo / mid, 1.0, 1e-8);
    EXPECT_NEAR(w.hi / mid, 1.0, 1e-8);
    EXPECT_GT(w.lo, w.hi);  // decreasing kernel weighs the left node more
}

TEST(CellPowerWeights, OriginCellAndRejections) {
    const auto w = cell_power_weights(0.0, 2.0, 3.0);
    // int_0^2 z^2 (2-z)/2 dz = 2/3, int_0^2 z^2 z/2 dz = 2
    EXPECT_NEAR(w.lo, 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(w.hi, 2.0, 1e-14);
    EXPECT_THROW(cell_power_weights(0.0, 1.0, -2.0), std::invalid_argument);
    EXPECT_THROW(cell_power_weights(1.0, 2.0, 0.0), std::invalid_argument);
    EXPECT_THROW(cell_power_weights(1.0, 2.0, -1.0), std::invalid_argument);
    EXPECT_THROW(cell_power_weights(2.0, 1.0, 2.0), std::invalid_argument);
}

TEST(PrecomputeTables, GammaMatchesTensorQuadrature) {
    using boost::math::quadrature::gauss;
    const KouParams p;
    const auto grid = build_grid(40, 100.0, 1000.0);
    const auto t = precompute_tables(grid, KouModel(p));
    const double beta1[4] = {p.eta_q1, -p.eta_p1, p.eta_q1, -p.eta_p1};
    const double beta2[4] = {p.eta_q2, p.eta_q2, -p.eta_p2, -p.eta_p2};
    const std::pair<std::size_t, std::size_t> cells[] = {{2, 2}, {7, 19}, {25, 3}, {33, 38}, {40, 40}};
    for (int c = 0; c < 4; ++c) {
        for (auto [k, l] : cells) {
            const double a1 = grid.nodes[k - 1], b1 = grid.nodes[k], a2 = grid.nodes[l - 1], b2 = grid.nodes[l];
            const auto& g = t.quadrant[c].gamma[grid.index(k, l)];
            double sum = 0.0;
            for (int corner = 0; corner < 4; ++corner) {
                const int ax = corner & 1, ay = corner >> 1;
                auto basis1 = [&](double z) { return ax ? (z - a1) / (b1 - a1) : (b1 - z) / (b1 - a1); };
                auto basis2 = [&](double z) { return ay ? (z - a2) / (b2 - a2) : (b2 - z) / (b2 - a2); };
                const double q = gauss<double, 16>::integrate(
                    [&](double z2) {
                        return std::pow(z2, beta2[c] - 1.0) * basis2(z2) *
                               gauss<double, 16>::integrate(
                                   [&](double z1) { return std::pow(z1, beta1[c] - 1.0) * basis1(z1); }, a1, b1);
                    },
                    a2, b2);
                EXPECT_NEAR(g[corner], q, 1e-12 * q) << "c=" << c << " k=" << k << " l=" << l;
                EXPECT_GE(g[corner], 0.0);
                sum += g[corner];
            }
            if (c == 0) {
                const double closed = (std::pow(b1, p.eta_q1) - std::pow(a1, p.eta_q1)) / p.eta_q1 *
                                      (std::pow(b2, p.eta_q2) - std::pow(a2, p.eta_q2)) / p.eta_q2;
                EXPECT_NEAR(sum, closed, 1e-12 * closed);
            }
        }
    }
}

TEST(PrecomputeTables, PsiPrefactors) {
    const KouParams p;
    const auto grid = build_grid(20, 100.0, 1000.0);
    const auto t = precompute_tables(grid, KouModel(p));
    const std::size_t i = 7, j = 12;
    const double s1 = grid.nodes[i], s2 = grid.nodes[j];
    const double psi1 =
        p.lambda * p.q1() * p.q2() * p.eta_q1 * p.eta_q2 * std::pow(s1, -p.eta_q1) * std::pow(s2, -p.eta_q2);
    const double psi4 =
        p.lambda * p.p1 * p.p2 * p.eta_p1 * p.eta_p2 * std::pow(s1, p.eta_p1) * std::pow(s2, p.eta_p2);
    EXPECT_NEAR(t.quadrant[0].psi[grid.index(i, j)], psi1, 1e-13 * psi1);
    EXPECT_NEAR(t.quadrant[3].psi[grid.index(i, j)], psi4, 1e-13 * psi4);
    EXPECT_EQ(t.quadrant[1].psi[grid.index(0, j)], 0.0);
}

TEST(JumpApply, MatchesDenseOracle) {
    std::mt19937_64 rng(2024);
    for (std::size_t m : {4u, 7u, 10u}) {
        const auto grid = build_grid(m, 100.0, 1000.0);
        const KouModel model{KouParams{}};
        const auto t = precompute_tables(grid, model);
        for (int trial = 0; trial < 20; ++trial) {
            const auto V = random_vector(grid.size(), rng);
            const auto fast = apply(t, grid, V);
            const auto dense = dense_apply(grid, model, V);
            EXPECT_LE(max_diff(fast, dense), 1e-12 * max_abs(dense)) << "m=" << m;
        }
    }
}

TEST(JumpApply, SerialAndParallelAgree) {
    std::mt19937_64 rng(5);
    const auto grid = build_grid(60, 100.0, 1000.0);
    const auto t = precompute_tables(grid, KouModel(KouParams{}));
    const auto V = random_vector(grid.size(), rng);
    const auto par = apply(t, grid, V);
    std::vector<double> ser(grid.size()), counted(grid.size());
    serial::apply(t, grid, V, ser);
    OpCounter ops;
    serial::apply_counted(t, grid, V, counted, ops);
    EXPECT_LE(max_diff(par, ser), 1e-13 * max_abs(ser));
    EXPECT_EQ(ser, counted);
}

TEST(JumpApply, ZeroLinearMonotone) {
    std::mt19937_64 rng(9);
    const auto grid = build_grid(12, 100.0, 1000.0);
    const KouModel model{KouParams{}};
    const auto t = precompute_tables(grid, model);
    const std::vector<double> zero(grid.size(), 0.0);
    EXPECT_EQ(max_abs(apply(t, grid, zero)), 0.0);
    EXPECT_EQ(max_abs(dense_apply(grid, model, zero)), 0.0);

    const auto V = random_vector(grid.size(), rng);
    const auto W = random_vector(grid.size(), rng);
    const double a = 0.37, b = -2.1;
    std::vector<double> comb(grid.size());
    for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = a * V[i] + b * W[i];
    const auto JV = apply(t, grid, V), JW = apply(t, grid, W), JC = apply(t, grid, comb);
    const auto DV = dense_apply(grid, model, V), DW = dense_apply(grid, model, W), DC = dense_apply(grid, model, comb);
    for (std::size_t i = 0; i < comb.size(); ++i) {
        EXPECT_NEAR(JC[i], a * JV[i] + b * JW[i], 1e-13 * (1.0 + max_abs(JC)));
        EXPECT_NEAR(DC[i], a * DV[i] + b * DW[i], 1e-13 * (1.0 + max_abs(DC)));
    }

    std::vector<double> pos(grid.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = std::abs(V[i]);
    for (double x : apply(t, grid, pos)) EXPECT_GE(x, 0.0);
}

TEST(JumpApply, ConstantAndBilinearDataExact) {
    const KouParams p;
    const auto grid = build_grid(40, 100.0, 1000.0);
    const auto t = precompute_tables(grid, KouModel(p));
    std::vector<double> one(grid.size(), 1.0), prod(grid.size());
    for (std::size_t j = 0; j <= grid.m; ++j)
        for (std::size_t i = 0; i <= grid.m; ++i) prod[grid.index(i, j)] = grid.nodes[i] * grid.nodes[j];
    const auto J1 = apply(t, grid, one);
    const auto Jp = apply(t, grid, prod);
    for (std::size_t j = 1; j < grid.m; ++j) {
        for (std::size_t i = 1; i < grid.m; ++i) {
            const double s1 = grid.nodes[i], s2 = grid.nodes[j];
            const double R1 = grid.smax / s1, R2 = grid.smax / s2;
            const double mass = p.lambda * truncated_mass(p.p1, p.eta_p1, R1) * truncated_mass(p.p2, p.eta_p2, R2);
            const double first = p.lambda * s1 * s2 * truncated_first_moment(p.p1, p.eta_p1, p.eta_q1, R1) *
                                 truncated_first_moment(p.p2, p.eta_p2, p.eta_q2, R2);
            ASSERT_NEAR(J1[grid.index(i, j)], mass, 1e-12 * mass);
            ASSERT_NEAR(Jp[grid.index(i, j)], first, 1e-12 * first);
            if (s1 <= 100.0 && s2 <= 100.0) EXPECT_NEAR(J1[grid.index(i, j)], p.lambda, 1e-3 * p.lambda);
        }
    }
    EXPECT_DOUBLE_EQ(J1[grid.index(0, 0)], p.lambda);
    EXPECT_EQ(J1[grid.index(grid.m, 3)], 0.0);
    EXPECT_EQ(J1[grid.index(3, grid.m)], 0.0);
}

TEST(JumpApply, EdgeMatchesDirectQuadrature) {
    using boost::math::quadrature::gauss_kronrod;
    const KouParams p;
    const auto grid = build_grid(10, 100.0, 1000.0);
    const auto t = precompute_tables(grid, KouModel(p));
    std::mt19937_64 rng(17);
    const auto v = random_vector(grid.m + 1, rng);
    for (int axis : {1, 2}) {
        const double prob = axis == 1 ? p.p1 : p.p2;
        const double ep = axis == 1 ? p.eta_p1 : p.eta_p2;
        const double eq = axis == 1 ? p.eta_q1 : p.eta_q2;
        const auto J = apply_edge(t, grid, v, axis);
        for (std::size_t j = 1; j < grid.m; ++j) {
            const double s = grid.nodes[j];
            double want = 0.0;
            for (std::size_t k = 1; k <= grid.m; ++k) {
                const double a = grid.nodes[k - 1], b = grid.nodes[k];
                auto integrand = [&](double z) {
                    const double vz = v[k - 1] + (v[k] - v[k - 1]) * (z - a) / (b - a);
                    return p.lambda * jump_density_1d(z / s, prob, ep, eq) / s * vz;
                };
                want += gauss_kronrod<double, 61>::integrate(integrand, a, b, 10, 1e-15);
            }
            EXPECT_NEAR(J[j], want, 1e-12 * std::max(1.0, max_abs(J))) << "axis " << axis << " j " << j;
        }
        EXPECT_DOUBLE_EQ(J[0], p.lambda * v[0]);
        EXPECT_EQ(J[grid.m], 0.0);
    }
    EXPECT_THROW(apply_edge(t, grid, v, 3), std::invalid_argument);
}

TEST(JumpApply, EdgeRowsOfFullApply) {
    std::mt19937_64 rng(19);
    const auto grid = build_grid(14, 100.0, 1000.0);
    const auto t = precompute_tables(grid, KouModel(KouParams{}));
    const auto V = random_vector(grid.size(), rng);
    const auto J = apply(t, grid, V);
    std::vector<double> e1(grid.m + 1), e2(grid.m + 1);
    for (std::size_t k = 0; k <= grid.m; ++k) {
        e1[k] = V[grid.index(k, 0)];
        e2[k] = V[grid.index(0, k)];
    }
    const auto J1 = apply_edge(t, grid, e1, 1);
    const auto J2 = apply_edge(t, grid, e2, 2);
    for (std::size_t k = 0; k <= grid.m; ++k) {
        EXPECT_DOUBLE_EQ(J[grid.index(k, 0)], J1[k]);
        EXPECT_DOUBLE_EQ(J[grid.index(0, k)], J2[k]);
    }
}

TEST(JumpApply, OperationCountScalesWithGridPoints) {
    const KouModel model{KouParams{}};
    auto count = [&](std::size_t m) {
        const auto grid = build_grid(m, 100.0, 1000.0);
        const auto t = precompute_tables(grid, model);
        std::vector<double> V(grid.size(), 1.0), J(grid.size());
        OpCounter ops;
        serial::apply_counted(t, grid, V, J, ops);
        return static_cast<double>(ops.total());
    };
    const double c50 = count(50), c100 = count(100), c200 = count(200);
    EXPECT_GT(c100 / c50, 3.5);
    EXPECT_LT(c100 / c50, 4.5);
    EXPECT_GT(c200 / c100, 3.5);
    EXPECT_LT(c200 / c100, 4.5);
    EXPECT_LT(c200 / (200.0 * 200.0), 60.0);
}

TEST(JumpApply, DenseOracleGuardsAndMismatch) {
    const KouModel model{KouParams{}};
    const auto big = build_grid(21, 100.0, 1000.0);
    EXPECT_THROW(dense_apply(big, model, std::vector<double>(big.size())), std::invalid_argument);
    const auto grid = build_grid(6, 100.0, 1000.0);
    const auto t = precompute_tables(grid, model);
    std::vector<double> wrong(grid.size() - 1), out(grid.size());
    EXPECT_THROW(apply(t, grid, wrong, out), std::invalid_argument);
}
