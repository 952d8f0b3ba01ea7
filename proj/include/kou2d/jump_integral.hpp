#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kou2d/kou_model.hpp"
#include "kou2d/spatial_grid.hpp"

namespace kou2d {

/// Integrals of z^(beta-1) times the two linear hat pieces over [a, b]:
/// lo pairs with the node at a, hi with the node at b.
struct CellPowerWeights {
    double lo;
    double hi;
};

/// Closed form (power rule); a small-cell series avoids cancellation.
/// Requires beta != 0, beta != -1, and a > 0 unless beta > 0.
CellPowerWeights cell_power_weights(double a, double b, double beta);

/// Per-cell hat weights along one direction for one kernel exponent.
/// Index k in 1..m refers to the cell [s_{k-1}, s_k]; index 0 is unused.
struct DirectionWeights {
    double beta = 0.0;
    std::vector<double> lo;
    std::vector<double> hi;
};

/// The four quadrants of the jump integral around a node (i, j):
/// 0: z1 < s1, z2 < s2   1: z1 > s1, z2 < s2   2: z1 < s1, z2 > s2   3: z1 > s1, z2 > s2
struct QuadrantTable {
    std::vector<double> psi;                  // prefactor at every node (0 where s1 or s2 is 0)
    std::vector<std::array<double, 4>> gamma; // per cell (k,l) at index(k,l): g00, g10, g01, g11
};

/// Table for the 1D integral on an edge where one coordinate is zero.
struct EdgeTable {
    DirectionWeights down;      // cells below the node (q-branch)
    DirectionWeights up;        // cells above the node (p-branch)
    std::vector<double> psi_down;
    std::vector<double> psi_up;
};

struct JumpCoeffTables {
    std::size_t m = 0;
    double lambda = 0.0;
    std::array<QuadrantTable, 4> quadrant;
    EdgeTable edge_s1;  // nodes (i, 0): integral along s1
    EdgeTable edge_s2;  // nodes (0, j): integral along s2
};

JumpCoeffTables precompute_tables(const SpatialGrid& grid, const KouModel& model);

/// J = A_J V via four double cumulative sums, O(m^2). J is zero on the far
/// boundary rows (pinned values).
void apply(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V,
           std::span<double> J);
std::vector<double> apply(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V);

/// Edge integral on s1 = 0 (axis 2, varying s2) or s2 = 0 (axis 1, varying s1).
/// V_edge has m+1 entries; the result at index 0 and m is set to lambda*V[0] and 0.
std::vector<double> apply_edge(const JumpCoeffTables& tables, const SpatialGrid& grid,
                               std::span<const double> V_edge, int axis);

/// Dense-matrix oracle (m <= 20): same interpolation and truncation, summed directly.
std::vector<double> dense_apply(const SpatialGrid& grid, const KouModel& model, std::span<const double> V);

struct OpCounter {
    std::uint64_t adds = 0;
    std::uint64_t mults = 0;
    std::uint64_t total() const { return adds + mults; }
};

namespace serial {
/// Single-threaded reference of apply.
void apply(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V,
           std::span<double> J);
/// As serial::apply, counting every floating-point addition and multiplication.
void apply_counted(const JumpCoeffTables& tables, const SpatialGrid& grid, std::span<const double> V,
                   std::span<double> J, OpCounter& counter);
}  // namespace serial

}  // namespace kou2d
