#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kou2d/spatial_grid.hpp"

namespace kou2d {

/// Finite-difference Delta and Gamma surfaces on every grid node. Nodes on the
/// domain boundary use one-sided three-point formulas and are flagged.
struct GreeksSurfaces {
    std::vector<double> delta1;
    std::vector<double> delta2;
    std::vector<double> gamma11;
    std::vector<double> gamma12;
    std::vector<double> gamma22;
    std::vector<char> boundary;
};

GreeksSurfaces compute_greeks(std::span<const double> V, const SpatialGrid& grid);

enum class Quantity { value, delta1, delta2, gamma11, gamma12, gamma22 };

inline constexpr std::array<Quantity, 6> kAllQuantities{Quantity::value,   Quantity::delta1,
                                                        Quantity::delta2,  Quantity::gamma11,
                                                        Quantity::gamma12, Quantity::gamma22};

std::string quantity_name(Quantity q);

/// The surface for q: V itself for Quantity::value.
std::span<const double> surface_of(const GreeksSurfaces& g, std::span<const double> V, Quantity q);

/// Tensor-product local cubic through the 4x4 surrounding nodes.
double interpolate_at(std::span<const double> surface, const SpatialGrid& grid, double s1, double s2);

/// Grid CSV: header row of s1 nodes, then one row per s2 node.
void write_surface_csv(std::ostream& out, std::span<const double> surface, const SpatialGrid& grid,
                       double s_limit);

}  // namespace kou2d
