#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace kou2d {

/// Tensor grid on [0, Smax]^2 with the same node set in both directions.
///
/// The core [0, 2K] is uniform with spacing h; outside, nodes follow
/// s = 2K + (h/dxi) sinh(j dxi), which continues the uniform map with
/// matching slope so the spacing grows smoothly.
struct SpatialGrid {
    std::size_t m = 0;          // intervals per direction
    std::vector<double> nodes;  // m+1 coordinates, shared by s1 and s2
    double smax = 0.0;
    double strike = 0.0;
    std::size_t m_unif = 0;     // nodes[m_unif] == 2K
    double h = 0.0;             // uniform spacing in the core
    double dxi = 0.0;           // stretching parameter of the outer zone

    std::size_t points_per_dim() const { return m + 1; }
    std::size_t size() const { return (m + 1) * (m + 1); }
    /// Row-major index with s1 varying fastest.
    std::size_t index(std::size_t i, std::size_t j) const { return i + (m + 1) * j; }

    const std::vector<double>& nodes1() const { return nodes; }
    const std::vector<double>& nodes2() const { return nodes; }

    bool is_far_boundary(std::size_t i, std::size_t j) const { return i == m || j == m; }
};

SpatialGrid build_grid(std::size_t m, double strike, double smax);

/// Put-on-the-average payoff max(0, K - (s1+s2)/2).
double payoff(double s1, double s2, double strike);

/// Exact mean of the payoff over the axis-aligned box [x0,x1]x[y0,y1].
double payoff_cell_average(double x0, double x1, double y0, double y1, double strike);

/// Initial vector: nodal payoff, replaced by the dual-cell average at nodes whose
/// dual cell straddles the kink s1 + s2 = 2K.
std::vector<double> initial_vector(const SpatialGrid& grid);

/// Dual cell of node i in one direction (half spacings, clipped at the domain ends).
struct DualInterval {
    double lo;
    double hi;
};
DualInterval dual_interval(const SpatialGrid& grid, std::size_t i);

/// Two-column CSV (index along a direction, coordinate); both directions share the nodes.
void write_grid_csv(std::ostream& out, const SpatialGrid& grid);

}  // namespace kou2d
