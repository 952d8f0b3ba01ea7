#include "kou2d/greeks.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "kou2d/fd_operator.hpp"

namespace kou2d {

namespace {

// Three-point stencil for node i: weights apply to nodes first, first+1, first+2.
struct NodeStencil {
    std::size_t first;
    StencilWeights d1;
    StencilWeights d2;
};

NodeStencil node_stencil(const std::vector<double>& s, std::size_t i, std::size_t m) {
    if (i == 0) {
        return {0, lagrange3_weights(s[0], s[0], s[1], s[2], 1), lagrange3_weights(s[0], s[0], s[1], s[2], 2)};
    }
    if (i == m) {
        return {m - 2, lagrange3_weights(s[m], s[m - 2], s[m - 1], s[m], 1),
                lagrange3_weights(s[m], s[m - 2], s[m - 1], s[m], 2)};
    }
    const double hl = s[i] - s[i - 1];
    const double hr = s[i + 1] - s[i];
    return {i - 1, central_weights(hl, hr, 1), central_weights(hl, hr, 2)};
}

}  // namespace

GreeksSurfaces compute_greeks(std::span<const double> V, const SpatialGrid& grid) {
    if (V.size() != grid.size()) throw std::invalid_argument("compute_greeks: size mismatch");
    const std::size_t m = grid.m;
    const std::size_t n = m + 1;
    std::vector<NodeStencil> st(n);
    for (std::size_t i = 0; i < n; ++i) st[i] = node_stencil(grid.nodes, i, m);

    GreeksSurfaces g;
    g.delta1.resize(grid.size());
    g.delta2.resize(grid.size());
    g.gamma11.resize(grid.size());
    g.gamma12.resize(grid.size());
    g.gamma22.resize(grid.size());
    g.boundary.resize(grid.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        const NodeStencil& sy = st[j];
        const double w1y[3] = {sy.d1.left, sy.d1.centre, sy.d1.right};
        const double w2y[3] = {sy.d2.left, sy.d2.centre, sy.d2.right};
        for (std::size_t i = 0; i < n; ++i) {
            const NodeStencil& sx = st[i];
            const double w1x[3] = {sx.d1.left, sx.d1.centre, sx.d1.right};
            const double w2x[3] = {sx.d2.left, sx.d2.centre, sx.d2.right};
            double d1 = 0.0, d2 = 0.0, g11 = 0.0, g22 = 0.0, g12 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double vx = V[grid.index(sx.first + a, j)];
                d1 += w1x[a] * vx;
                g11 += w2x[a] * vx;
                const double vy = V[grid.index(i, sy.first + a)];
                d2 += w1y[a] * vy;
                g22 += w2y[a] * vy;
            }
            for (int b = 0; b < 3; ++b) {
                double inner = 0.0;
                for (int a = 0; a < 3; ++a) inner += w1x[a] * V[grid.index(sx.first + a, sy.first + b)];
                g12 += w1y[b] * inner;
            }
            const std::size_t idx = grid.index(i, j);
            g.delta1[idx] = d1;
            g.delta2[idx] = d2;
            g.gamma11[idx] = g11;
            g.gamma12[idx] = g12;
            g.gamma22[idx] = g22;
            g.boundary[idx] = i == 0 || j == 0 || i == m || j == m;
        }
    }
    return g;
}

std::string quantity_name(Quantity q) {
    switch (q) {
        case Quantity::value: return "value";
        case Quantity::delta1: return "delta1";
        case Quantity::delta2: return "delta2";
        case Quantity::gamma11: return "gamma11";
        case Quantity::gamma12: return "gamma12";
        case Quantity::gamma22: return "gamma22";
    }
    return "?";
}

std::span<const double> surface_of(const GreeksSurfaces& g, std::span<const double> V, Quantity q) {
    switch (q) {
        case Quantity::value: return V;
        case Quantity::delta1: return g.delta1;
        case Quantity::delta2: return g.delta2;
        case Quantity::gamma11: return g.gamma11;
        case Quantity::gamma12: return g.gamma12;
        case Quantity::gamma22: return g.gamma22;
    }
    return V;
}

namespace {

struct CubicStencil {
    std::size_t first;
    double w[4];
};

CubicStencil cubic_stencil(const std::vector<double>& s, double x) {
    const std::size_t m = s.size() - 1;
    auto it = std::upper_bound(s.begin(), s.end(), x);
    std::size_t cell = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
    cell = std::min(cell, m - 1);
    std::size_t first = cell == 0 ? 0 : cell - 1;
    first = std::min(first, m - 3);
    CubicStencil c{first, {}};
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b) {
            if (b == a) continue;
            w *= (x - s[first + b]) / (s[first + a] - s[first + b]);
        }
        c.w[a] = w;
    }
    return c;
}

}  // namespace

double interpolate_at(std::span<const double> surface, const SpatialGrid& grid, double s1, double s2) {
    if (surface.size() != grid.size()) throw std::invalid_argument("interpolate_at: size mismatch");
    if (!(s1 >= 0.0 && s1 <= grid.smax && s2 >= 0.0 && s2 <= grid.smax)) {
        throw std::out_of_range("interpolate_at: query outside [0, Smax]^2");
    }
    const CubicStencil cx = cubic_stencil(grid.nodes, s1);
    const CubicStencil cy = cubic_stencil(grid.nodes, s2);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += cx.w[a] * surface[grid.index(cx.first + a, cy.first + b)];
        acc += cy.w[b] * row;
    }
    return acc;
}

void write_surface_csv(std::ostream& out, std::span<const double> surface, const SpatialGrid& grid,
                       double s_limit) {
    char buf[64];
    std::size_t last = 0;
    while (last < grid.m && grid.nodes[last + 1] <= s_limit) ++last;
    out << "s2\\s1";
    for (std::size_t i = 0; i <= last; ++i) {
        std::snprintf(buf, sizeof buf, ",%.9g", grid.nodes[i]);
        out << buf;
    }
    out << '\n';
    for (std::size_t j = 0; j <= last; ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", grid.nodes[j]);
        out << buf;
        for (std::size_t i = 0; i <= last; ++i) {
            std::snprintf(buf, sizeof buf, ",%.9g", surface[grid.index(i, j)]);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace kou2d
