#pragma once

#include <cstddef>

#include "kou2d/kou_model.hpp"
#include "kou2d/sparse.hpp"
#include "kou2d/spatial_grid.hpp"

namespace kou2d {

/// Three-point weights (left, centre, right) of a finite difference.
struct StencilWeights {
    double left;
    double centre;
    double right;
};

/// Central weights on a nonuniform stencil with spacings hL (left) and hR (right).
/// order 1 approximates the first derivative, order 2 the second.
StencilWeights central_weights(double hL, double hR, int order);

/// Weights for the derivative of the quadratic through x0 < x1 < x2, evaluated
/// at x. Used for one-sided formulas at the domain edges.
StencilWeights lagrange3_weights(double x, double x0, double x1, double x2, int order);

/// Sparse discretisation of the differential part of the pricing operator,
/// including the -(r + lambda) reaction term.
///
/// Rows on the far edges s1 = Smax or s2 = Smax are empty: those values are
/// pinned (homogeneous Dirichlet). On s1 = 0 or s2 = 0 the terms carrying the
/// vanished coordinate drop out.
SparseMatrix assemble_ad(const SpatialGrid& grid, const KouModel& model);

}  // namespace kou2d
