#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kou2d/jump_integral.hpp"
#include "kou2d/kou_model.hpp"
#include "kou2d/sparse.hpp"
#include "kou2d/spatial_grid.hpp"

namespace kou2d {

/// The four members of the two-stage DIRK family studied here.
enum class Variant { a, b, c, d };

Variant parse_variant(const std::string& s);
std::string variant_name(Variant v);
double variant_theta(Variant v);

struct DirkConfig {
    Variant variant = Variant::a;
    double theta = 0.0;
    std::size_t N = 50;
    bool damping = false;  // replace steps 1 and 2 by penalised backward Euler
    double large = 1e7;
    double tol = 1e-7;
    std::size_t max_inner = 100;
    /// first iterate at which the stopping rule is evaluated (both criteria
    /// then compare two solved iterates)
    std::size_t min_inner = 2;
    bool extrapolate = true;  // linear extrapolation of the iteration start
    bool verbose = false;
    SolverOptions linear{};

    /// theta and damping fixed by the variant; damping on for b and c.
    static DirkConfig for_variant(Variant v, std::size_t N);
};

/// t^n = (n/N)^2 T, n = 0..N
std::vector<double> time_grid(std::size_t N, double T);

/// Stability function of the DIRK tableau.
std::complex<double> stability_function(double theta, std::complex<double> z);

/// Large where Y < V0 (strictly), 0 elsewhere.
std::vector<double> penalty_diag(std::span<const double> Y, std::span<const double> V0, double large);

/// Semidiscrete complementarity system V >= V0, V' >= (A_D + A_J)V.
struct LcpSystem {
    SparseMatrix ad;
    /// out = A_J in; empty means A_J = 0
    std::function<void(std::span<const double>, std::span<double>)> jump;
    std::vector<double> obstacle;
    /// rows whose value is held fixed (far-field Dirichlet); never penalised
    std::vector<char> pinned;

    std::size_t size() const { return obstacle.size(); }
};

struct StepStats {
    std::size_t n = 0;
    double dt = 0.0;
    std::size_t kappa1 = 0;
    std::size_t kappa2 = 0;  // 0 for a backward Euler step
    std::size_t linear_iterations = 0;
};

struct PricerState {
    std::vector<double> times;
    std::vector<double> v_prev;   // solution at t^{n-1}
    std::vector<double> v_prev2;  // solution at t^{n-2}
    std::size_t n = 0;            // steps completed
    std::vector<StepStats> history;
};

class DirkStepper {
public:
    DirkStepper(const LcpSystem& system, DirkConfig config);

    PricerState initial_state(std::vector<double> v0, std::vector<double> times) const;

    /// Advances by one step, choosing BE-P for the damped start.
    void step(PricerState& state) const;

    void dirk_step(PricerState& state) const;
    void be_p_step(PricerState& state) const;

    const DirkConfig& config() const { return config_; }

    struct IterationResult {
        std::size_t kappa = 0;
        std::size_t linear_iterations = 0;
        bool stopped_by_update = false;
        bool stopped_by_mask = false;
    };
    /// One penalty/fixed-point iteration process:
    /// (I - theta_dt A_D + P_{k-1}) Y_k = W + theta_dt A_J Y_{k-1} + P_{k-1} V0.
    /// Y holds the starting vector on entry and the final iterate on exit.
    IterationResult iterate(std::span<const double> W, double theta_dt, std::vector<double>& Y) const;

private:
    void apply_full(std::span<const double> v, std::span<double> out) const;
    void apply_jump(std::span<const double> v, std::span<double> out) const;
    std::vector<double> start_vector(const PricerState& state, double dt) const;
    void finish_step(PricerState& state, std::vector<double> v_new, StepStats stats) const;

    const LcpSystem& sys_;
    DirkConfig config_;
};

/// Everything needed to price on one grid: operator, jump tables, initial vector.
struct PidcpProblem {
    PidcpProblem(const KouModel& model, SpatialGrid grid);

    KouModel model;
    std::shared_ptr<const SpatialGrid> grid;
    std::shared_ptr<const JumpCoeffTables> tables;
    LcpSystem system;

    const std::vector<double>& v0() const { return system.obstacle; }
};

struct PricingResult {
    std::vector<double> v;
    std::vector<StepStats> steps;
    double seconds = 0.0;
};

/// Runs the full time stepping to the horizon (defaults to the maturity).
PricingResult solve_american(const PidcpProblem& problem, const DirkConfig& config);
PricingResult solve_american(const PidcpProblem& problem, const DirkConfig& config, double horizon);
PricingResult solve_american(const KouModel& model, const SpatialGrid& grid, const DirkConfig& config);

}  // namespace kou2d
