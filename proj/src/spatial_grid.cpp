#include "kou2d/spatial_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace kou2d {

namespace {

// Solves (h/d) sinh(k d) = target for d > 0. The left side increases from k*h.
double solve_stretching(double h, std::size_t k, double target) {
    const double kd = static_cast<double>(k);
    auto g = [&](double d) { return h / d * std::sinh(kd * d) - target; };
    if (!(target > kd * h)) {
        throw std::runtime_error("build_grid: Smax too small for the outer zone (no stretching root)");
    }
    double lo = 0.0;
    double hi = 1.0 / kd;
    while (g(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("build_grid: stretching root not bracketed");
    }
    for (int it = 0; it < 400; ++it) {
        double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= 1e-13 * hi) break;
    }
    return 0.5 * (lo + hi);
}

struct Point {
    double x;
    double y;
};

}  // namespace

SpatialGrid build_grid(std::size_t m, double strike, double smax) {
    if (m < 3) throw std::invalid_argument("build_grid: m must be >= 3");
    if (!(strike > 0.0)) throw std::invalid_argument("build_grid: K must be > 0");
    if (!(smax > 2.0 * strike)) throw std::invalid_argument("build_grid: Smax must exceed 2K");

    SpatialGrid g;
    g.m = m;
    g.smax = smax;
    g.strike = strike;
    g.m_unif = (m + 1) / 2;
    g.h = 2.0 * strike / static_cast<double>(g.m_unif);
    g.nodes.resize(m + 1);
    for (std::size_t i = 0; i <= g.m_unif; ++i) {
        g.nodes[i] = static_cast<double>(i) * g.h;
    }
    g.nodes[g.m_unif] = 2.0 * strike;

    const std::size_t k = m - g.m_unif;
    g.dxi = solve_stretching(g.h, k, smax - 2.0 * strike);
    const double alpha = g.h / g.dxi;
    for (std::size_t j = 1; j < k; ++j) {
        g.nodes[g.m_unif + j] = 2.0 * strike + alpha * std::sinh(static_cast<double>(j) * g.dxi);
    }
    g.nodes[m] = smax;
    return g;
}

double payoff(double s1, double s2, double strike) {
    return std::max(0.0, strike - 0.5 * (s1 + s2));
}

double payoff_cell_average(double x0, double x1, double y0, double y1, double strike) {
    const double line = 2.0 * strike;
    const double area = (x1 - x0) * (y1 - y0);
    if (area <= 0.0) return payoff(x0, y0, strike);

    // Clip the box against the half-plane x + y <= 2K (Sutherland-Hodgman, one edge).
    const std::array<Point, 4> box{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
    std::array<Point, 8> poly{};
    std::size_t n = 0;
    for (std::size_t a = 0; a < box.size(); ++a) {
        const Point& p = box[a];
        const Point& q = box[(a + 1) % box.size()];
        const double dp = line - (p.x + p.y);
        const double dq = line - (q.x + q.y);
        if (dp >= 0.0) poly[n++] = p;
        if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
            const double t = dp / (dp - dq);
            poly[n++] = {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        }
    }
    if (n < 3) return 0.0;

    // Integral of the linear function K - (x+y)/2 = area * value at centroid.
    double a2 = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const Point& p = poly[a];
        const Point& q = poly[(a + 1) % n];
        const double cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    if (a2 == 0.0) return 0.0;
    cx /= 3.0 * a2;
    cy /= 3.0 * a2;
    const double clipped_area = 0.5 * a2;
    return clipped_area * (strike - 0.5 * (cx + cy)) / area;
}

DualInterval dual_interval(const SpatialGrid& grid, std::size_t i) {
    const auto& s = grid.nodes;
    const double lo = i == 0 ? s[0] : s[i] - 0.5 * (s[i] - s[i - 1]);
    const double hi = i == grid.m ? s[i] : s[i] + 0.5 * (s[i + 1] - s[i]);
    return {lo, hi};
}

std::vector<double> initial_vector(const SpatialGrid& grid) {
    const std::size_t n = grid.points_per_dim();
    const double line = 2.0 * grid.strike;
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < n; ++j) {
        const DualInterval cj = dual_interval(grid, j);
        for (std::size_t i = 0; i < n; ++i) {
            const DualInterval ci = dual_interval(grid, i);
            const double lo = ci.lo + cj.lo;
            const double hi = ci.hi + cj.hi;
            double value;
            if (lo < line && hi > line) {
                value = payoff_cell_average(ci.lo, ci.hi, cj.lo, cj.hi, grid.strike);
            } else {
                value = payoff(grid.nodes[i], grid.nodes[j], grid.strike);
            }
            v[grid.index(i, j)] = value;
        }
    }
    return v;
}

void write_grid_csv(std::ostream& out, const SpatialGrid& grid) {
    out << "index,coordinate\n";
    char buf[64];
    for (std::size_t i = 0; i <= grid.m; ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, grid.nodes[i]);
        out << buf;
    }
}

}  // namespace kou2d
