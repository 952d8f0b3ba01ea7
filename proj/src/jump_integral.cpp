#include "kou2d/jump_integral.hpp"

#include <cmath>
#include <stdexcept>

namespace kou2d {

namespace {

// F(t) = int_0^t (1+x)^(beta-1) x dx
double hat_moment(double t, double beta) {
    if (t < 0.25) {
        double c = 1.0;
        double tn = t * t;
        double sum = 0.0;
        for (int n = 0; n < 400; ++n) {
            const double term = c * tn / (n + 2);
            sum += term;
            if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
            c *= (beta - 1.0 - n) / (n + 1);
            tn *= t;
        }
        return sum;
    }
    const double lp = std::log1p(t);
    return std::expm1((beta + 1.0) * lp) / (beta + 1.0) - std::expm1(beta * lp) / beta;
}

}  // namespace

CellPowerWeights cell_power_weights(double a, double b, double beta) {
    if (beta == 0.0 || beta == -1.0) {
        throw std::invalid_argument("cell_power_weights: exponent needs a logarithmic antiderivative");
    }
    if (!(b > a) || a < 0.0) throw std::invalid_argument("cell_power_weights: need 0 <= a < b");
    const double h = b - a;
    if (a == 0.0) {
        if (!(beta > 0.0)) throw std::invalid_argument("cell_power_weights: divergent integral at 0");
        const double i0 = std::pow(b, beta) / beta;
        const double hi = std::pow(b, beta) * b / ((beta + 1.0) * h);
        return {i0 - hi, hi};
    }
    const double t = h / a;
    const double abeta = std::pow(a, beta);
    const double i0 = abeta * std::expm1(beta * std::log1p(t)) / beta;
    const double hi = abeta * hat_moment(t, beta) / t;
    return {i0 - hi, hi};
}

namespace {

DirectionWeights direction_weights(const SpatialGrid& grid, double beta) {
    DirectionWeights w;
    w.beta = beta;
    w.lo.assign(grid.m + 1, 0.0);
    w.hi.assign(grid.m + 1, 0.0);
    // Negative exponents are only ever used on cells away from the origin.
    const std::size_t first = beta > 0.0 ? 1 : 2;
    for (std::size_t k = first; k <= grid.m; ++k) {
        auto c = cell_power_weights(grid.nodes[k - 1], grid.nodes[k], beta);
        w.lo[k] = c.lo;
        w.hi[k] = c.hi;
    }
    return w;
}

EdgeTable edge_table(const SpatialGrid& grid, double lambda, double p, double eta_p, double eta_q) {
    EdgeTable e;
    e.down = direction_weights(grid, eta_q);
    e.up = direction_weights(grid, -eta_p);
    e.psi_down.assign(grid.m + 1, 0.0);
    e.psi_up.assign(grid.m + 1, 0.0);
    for (std::size_t k = 1; k <= grid.m; ++k) {
        const double s = grid.nodes[k];
        e.psi_down[k] = lambda * (1.0 - p) * eta_q * std::pow(s, -eta_q);
        e.psi_up[k] = lambda * p * eta_p * std::pow(s, eta_p);
    }
    return e;
}

}  // namespace

JumpCoeffTables precompute_tables(const SpatialGrid& grid, const KouModel& model) {
    const KouParams& p = model.params();
    JumpCoeffTables t;
    t.m = grid.m;
    t.lambda = p.lambda;
    t.edge_s1 = edge_table(grid, p.lambda, p.p1, p.eta_p1, p.eta_q1);
    t.edge_s2 = edge_table(grid, p.lambda, p.p2, p.eta_p2, p.eta_q2);

    const EdgeTable& e1 = t.edge_s1;
    const EdgeTable& e2 = t.edge_s2;
    const DirectionWeights* w1[4] = {&e1.down, &e1.up, &e1.down, &e1.up};
    const DirectionWeights* w2[4] = {&e2.down, &e2.down, &e2.up, &e2.up};
    // psi_c = lambda * (branch constants) * s1^(.) * s2^(.) = psi_edge1 * psi_edge2 / lambda
    const std::vector<double>* f1[4] = {&e1.psi_down, &e1.psi_up, &e1.psi_down, &e1.psi_up};
    const std::vector<double>* f2[4] = {&e2.psi_down, &e2.psi_down, &e2.psi_up, &e2.psi_up};

    const std::size_t n = grid.points_per_dim();
    for (int c = 0; c < 4; ++c) {
        QuadrantTable& q = t.quadrant[c];
        q.psi.assign(grid.size(), 0.0);
        q.gamma.assign(grid.size(), {0.0, 0.0, 0.0, 0.0});
        const auto& a = *w1[c];
        const auto& b = *w2[c];
        for (std::size_t j = 1; j < n; ++j) {
            for (std::size_t i = 1; i < n; ++i) {
                const std::size_t idx = grid.index(i, j);
                if (p.lambda > 0.0) {
                    q.psi[idx] = (*f1[c])[i] * (*f2[c])[j] / p.lambda;
                }
                q.gamma[idx] = {a.lo[i] * b.lo[j], a.hi[i] * b.lo[j], a.lo[i] * b.hi[j], a.hi[i] * b.hi[j]};
            }
        }
    }
    return t;
}

namespace {

struct NullCounter {
    void add(std::uint64_t) {}
    void mul(std::uint64_t) {}
};

struct CountingCounter {
    OpCounter* c;
    void add(std::uint64_t k) { c->adds += k; }
    void mul(std::uint64_t k) { c->mults += k; }
};

// 1D edge integral; out has m+1 entries.
template <class Counter>
void edge_apply_impl(const EdgeTable& e, std::size_t m, double lambda, const double* v, std::size_t stride,
                     double* out, std::size_t out_stride, Counter& cnt) {
    const auto V = [&](std::size_t k) { return v[k * stride]; };
    // down[j] = sum_{l<=j} g_down(l), computed forward; up via a backward sweep.
    double down = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        down += e.down.lo[j] * V(j - 1) + e.down.hi[j] * V(j);
        out[j * out_stride] = e.psi_down[j] * down;
        cnt.mul(3);
        cnt.add(2);
    }
    double up = 0.0;
    for (std::size_t j = m - 1; j >= 1; --j) {
        up += e.up.lo[j + 1] * V(j) + e.up.hi[j + 1] * V(j + 1);
        out[j * out_stride] += e.psi_up[j] * up;
        cnt.mul(3);
        cnt.add(3);
    }
    out[0] = lambda * V(0);
    out[m * out_stride] = 0.0;
    cnt.mul(1);
}

template <class Counter>
void apply_serial_impl(const JumpCoeffTables& t, const SpatialGrid& grid, std::span<const double> V,
                       std::span<double> J, Counter& cnt) {
    const std::size_t m = grid.m;
    const std::size_t n = m + 1;
    if (V.size() != grid.size() || J.size() != grid.size() || t.m != m) {
        throw std::invalid_argument("jump apply: dimension mismatch");
    }
    std::fill(J.begin(), J.end(), 0.0);
    std::vector<double> S(grid.size());
    for (int c = 0; c < 4; ++c) {
        const QuadrantTable& q = t.quadrant[c];
        const bool k_after = c == 1 || c == 3;
        const bool l_after = c == 2 || c == 3;
        for (std::size_t l = 0; l < n; ++l) {
            for (std::size_t k = 0; k < n; ++k) {
                if (k == 0 || l == 0) {
                    S[grid.index(k, l)] = 0.0;
                    continue;
                }
                const auto& g = q.gamma[grid.index(k, l)];
                S[grid.index(k, l)] = g[0] * V[grid.index(k - 1, l - 1)] + g[1] * V[grid.index(k, l - 1)] +
                                      g[2] * V[grid.index(k - 1, l)] + g[3] * V[grid.index(k, l)];
                cnt.mul(4);
                cnt.add(3);
            }
        }
        // along k
        for (std::size_t l = 1; l < n; ++l) {
            double* row = &S[grid.index(0, l)];
            if (!k_after) {
                for (std::size_t k = 1; k < n; ++k) row[k] += row[k - 1];
            } else {
                double carry = 0.0;
                for (std::size_t k = n; k-- > 0;) {
                    const double g = row[k];
                    row[k] = carry;
                    carry += g;
                }
            }
            cnt.add(m);
        }
        // along l
        for (std::size_t i = 0; i < n; ++i) {
            if (!l_after) {
                for (std::size_t l = 1; l < n; ++l) S[grid.index(i, l)] += S[grid.index(i, l - 1)];
            } else {
                double carry = 0.0;
                for (std::size_t l = n; l-- > 0;) {
                    const double g = S[grid.index(i, l)];
                    S[grid.index(i, l)] = carry;
                    carry += g;
                }
            }
            cnt.add(m);
        }
        for (std::size_t j = 1; j < m; ++j) {
            for (std::size_t i = 1; i < m; ++i) {
                const std::size_t idx = grid.index(i, j);
                J[idx] += q.psi[idx] * S[idx];
                cnt.mul(1);
                cnt.add(1);
            }
        }
    }
    std::vector<double> edge(n);
    edge_apply_impl(t.edge_s1, m, t.lambda, &V[0], 1, &J[0], 1, cnt);
    edge_apply_impl(t.edge_s2, m, t.lambda, &V[0], n, &J[0], n, cnt);
}

}  // namespace

void apply(const JumpCoeffTables& t, const SpatialGrid& grid, std::span<const double> V, std::span<double> J) {
    const std::size_t m = grid.m;
    const std::size_t n = m + 1;
    if (V.size() != grid.size() || J.size() != grid.size() || t.m != m) {
        throw std::invalid_argument("jump apply: dimension mismatch");
    }
    const auto sn = static_cast<std::ptrdiff_t>(n);
    std::vector<double> S(grid.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(J.size()); ++idx) J[idx] = 0.0;

    for (int c = 0; c < 4; ++c) {
        const QuadrantTable& q = t.quadrant[c];
        const bool k_after = c == 1 || c == 3;
        const bool l_after = c == 2 || c == 3;

        // Cell integrals and the sweep along k, one grid row per iteration.
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t l = 0; l < sn; ++l) {
            double* row = &S[static_cast<std::size_t>(l) * n];
            if (l == 0) {
                std::fill(row, row + n, 0.0);
                continue;
            }
            const double* vb = &V[static_cast<std::size_t>(l - 1) * n];
            const double* vt = &V[static_cast<std::size_t>(l) * n];
            const auto* g = &q.gamma[static_cast<std::size_t>(l) * n];
            row[0] = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                row[k] = g[k][0] * vb[k - 1] + g[k][1] * vb[k] + g[k][2] * vt[k - 1] + g[k][3] * vt[k];
            }
            if (!k_after) {
                for (std::size_t k = 1; k < n; ++k) row[k] += row[k - 1];
            } else {
                double carry = 0.0;
                for (std::size_t k = n; k-- > 0;) {
                    const double gk = row[k];
                    row[k] = carry;
                    carry += gk;
                }
            }
        }

        // Sweep along l: rows are consumed in order, columns in parallel.
        if (!l_after) {
            for (std::size_t l = 1; l < n; ++l) {
                double* cur = &S[l * n];
                const double* prev = &S[(l - 1) * n];
#pragma omp parallel for schedule(static)
                for (std::ptrdiff_t i = 0; i < sn; ++i) cur[i] += prev[i];
            }
        } else {
            std::vector<double> carry(n, 0.0);
            for (std::size_t l = n; l-- > 0;) {
                double* cur = &S[l * n];
#pragma omp parallel for schedule(static)
                for (std::ptrdiff_t i = 0; i < sn; ++i) {
                    const double g = cur[i];
                    cur[i] = carry[i];
                    carry[i] += g;
                }
            }
        }

#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t j = 1; j < static_cast<std::ptrdiff_t>(m); ++j) {
            for (std::size_t i = 1; i < m; ++i) {
                const std::size_t idx = grid.index(i, static_cast<std::size_t>(j));
                J[idx] += q.psi[idx] * S[idx];
            }
        }
    }

    NullCounter none;
    edge_apply_impl(t.edge_s1, m, t.lambda, &V[0], 1, &J[0], 1, none);
    edge_apply_impl(t.edge_s2, m, t.lambda, &V[0], n, &J[0], n, none);
}

std::vector<double> apply(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V) {
    std::vector<double> J(grid.size());
    apply(tables, grid, V, J);
    return J;
}

std::vector<double> apply_edge(const JumpCoeffTables& tables, const SpatialGrid& grid,
                               std::span<const double> V_edge, int axis) {
    if (V_edge.size() != grid.points_per_dim()) throw std::invalid_argument("apply_edge: size mismatch");
    if (axis != 1 && axis != 2) throw std::invalid_argument("apply_edge: axis must be 1 or 2");
    const EdgeTable& e = axis == 1 ? tables.edge_s1 : tables.edge_s2;
    std::vector<double> out(grid.points_per_dim(), 0.0);
    NullCounter none;
    edge_apply_impl(e, grid.m, tables.lambda, V_edge.data(), 1, out.data(), 1, none);
    return out;
}

namespace serial {

void apply(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V,
           std::span<double> J) {
    NullCounter none;
    apply_serial_impl(tables, grid, V, J, none);
}

void apply_counted(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V,
                   std::span<double> J, OpCounter& counter) {
    CountingCounter c{&counter};
    apply_serial_impl(tables, grid, V, J, c);
}

}  // namespace serial

std::vector<double> dense_apply(const SpatialGrid& grid, const KouModel& model, std::span<const double> V) {
    if (grid.m > 20) throw std::invalid_argument("dense_apply: refusing m > 20");
    if (V.size() != grid.size()) throw std::invalid_argument("dense_apply: size mismatch");
    const KouParams& p = model.params();
    const std::size_t m = grid.m;
    const std::size_t M = grid.size();
    const auto& s = grid.nodes;
    const double lam = p.lambda;

    std::vector<double> D(M * M, 0.0);
    auto at = [&](std::size_t row, std::size_t col) -> double& { return D[row * M + col]; };

    // Branch data per direction: (weight, exponent) below and above the node.
    struct Branch {
        double down_coef;
        double down_beta;
        double up_coef;
        double up_beta;
    };
    const Branch b1{(1.0 - p.p1) * p.eta_q1, p.eta_q1, p.p1 * p.eta_p1, -p.eta_p1};
    const Branch b2{(1.0 - p.p2) * p.eta_q2, p.eta_q2, p.p2 * p.eta_p2, -p.eta_p2};

    // prefactor and kernel exponent for cell k seen from node i in one direction
    auto factor = [&](const Branch& b, std::size_t i, std::size_t k, double& beta) {
        if (k <= i) {
            beta = b.down_beta;
            return b.down_coef * std::pow(s[i], -b.down_beta);
        }
        beta = b.up_beta;
        return b.up_coef * std::pow(s[i], -b.up_beta);
    };

    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t row = grid.index(i, j);
            if (i == 0 && j == 0) {
                at(row, row) = lam;
                continue;
            }
            if (i == 0 || j == 0) {
                // 1D integral along the non-vanishing coordinate
                const Branch& b = i == 0 ? b2 : b1;
                const std::size_t node = i == 0 ? j : i;
                for (std::size_t k = 1; k <= m; ++k) {
                    double beta = 0.0;
                    const double f = lam * factor(b, node, k, beta);
                    const auto w = cell_power_weights(s[k - 1], s[k], beta);
                    const std::size_t lo = i == 0 ? grid.index(0, k - 1) : grid.index(k - 1, 0);
                    const std::size_t hi = i == 0 ? grid.index(0, k) : grid.index(k, 0);
                    at(row, lo) += f * w.lo;
                    at(row, hi) += f * w.hi;
                }
                continue;
            }
            for (std::size_t l = 1; l <= m; ++l) {
                double beta2 = 0.0;
                const double f2 = factor(b2, j, l, beta2);
                const auto w2 = cell_power_weights(s[l - 1], s[l], beta2);
                for (std::size_t k = 1; k <= m; ++k) {
                    double beta1 = 0.0;
                    const double f1 = factor(b1, i, k, beta1);
                    const auto w1 = cell_power_weights(s[k - 1], s[k], beta1);
                    const double f = lam * f1 * f2;
                    at(row, grid.index(k - 1, l - 1)) += f * w1.lo * w2.lo;
                    at(row, grid.index(k, l - 1)) += f * w1.hi * w2.lo;
                    at(row, grid.index(k - 1, l)) += f * w1.lo * w2.hi;
                    at(row, grid.index(k, l)) += f * w1.hi * w2.hi;
                }
            }
        }
    }

    std::vector<double> J(M, 0.0);
    for (std::size_t r = 0; r < M; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < M; ++c) acc += D[r * M + c] * V[c];
        J[r] = acc;
    }
    return J;
}

}  // namespace kou2d
