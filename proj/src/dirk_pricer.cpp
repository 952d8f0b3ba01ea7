#include "kou2d/dirk_pricer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "kou2d/fd_operator.hpp"

namespace kou2d {

Variant parse_variant(const std::string& s) {
    if (s == "a" || s == "DIRKa") return Variant::a;
    if (s == "b" || s == "DIRKb") return Variant::b;
    if (s == "c" || s == "DIRKc") return Variant::c;
    if (s == "d" || s == "DIRKd") return Variant::d;
    throw std::invalid_argument("unknown variant '" + s + "' (expected a, b, c or d)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::a: return "DIRKa";
        case Variant::b: return "DIRKb";
        case Variant::c: return "DIRKc";
        case Variant::d: return "DIRKd";
    }
    return "?";
}

double variant_theta(Variant v) {
    switch (v) {
        case Variant::a: return 1.0 - 0.5 * std::sqrt(2.0);
        case Variant::b: return 1.0 / 3.0;
        case Variant::c: return 1.0;
        case Variant::d: return 1.0 + 0.5 * std::sqrt(2.0);
    }
    return 0.0;
}

DirkConfig DirkConfig::for_variant(Variant v, std::size_t N) {
    DirkConfig c;
    c.variant = v;
    c.theta = variant_theta(v);
    c.N = N;
    c.damping = v == Variant::b || v == Variant::c;
    return c;
}

std::vector<double> time_grid(std::size_t N, double T) {
    if (N < 1) throw std::invalid_argument("time_grid: N must be >= 1");
    std::vector<double> t(N + 1);
    const double dn = static_cast<double>(N);
    for (std::size_t n = 0; n <= N; ++n) {
        const double x = static_cast<double>(n) / dn;
        t[n] = x * x * T;
    }
    t[N] = T;
    return t;
}

std::complex<double> stability_function(double theta, std::complex<double> z) {
    const std::complex<double> den = 1.0 - theta * z;
    if (std::abs(den) == 0.0) throw std::domain_error("stability_function: pole at z = 1/theta");
    const std::complex<double> num = 1.0 + (1.0 - 2.0 * theta) * z + (0.5 - 2.0 * theta + theta * theta) * z * z;
    return num / (den * den);
}

std::vector<double> penalty_diag(std::span<const double> Y, std::span<const double> V0, double large) {
    if (Y.size() != V0.size()) throw std::invalid_argument("penalty_diag: dimension mismatch");
    std::vector<double> P(Y.size());
    for (std::size_t l = 0; l < Y.size(); ++l) P[l] = Y[l] < V0[l] ? large : 0.0;
    return P;
}

DirkStepper::DirkStepper(const LcpSystem& system, DirkConfig config) : sys_(system), config_(config) {
    if (!(config_.theta > 0.0)) throw std::invalid_argument("DirkStepper: theta must be > 0");
    if (config_.min_inner < 1 || config_.min_inner > config_.max_inner) {
        throw std::invalid_argument("DirkStepper: need 1 <= min_inner <= max_inner");
    }
    if (sys_.ad.rows != sys_.size() || sys_.pinned.size() != sys_.size()) {
        throw std::invalid_argument("DirkStepper: inconsistent system dimensions");
    }
}

PricerState DirkStepper::initial_state(std::vector<double> v0, std::vector<double> times) const {
    if (v0.size() != sys_.size()) throw std::invalid_argument("initial_state: size mismatch");
    PricerState s;
    s.times = std::move(times);
    s.v_prev2 = v0;
    s.v_prev = std::move(v0);
    return s;
}

void DirkStepper::apply_jump(std::span<const double> v, std::span<double> out) const {
    if (sys_.jump) {
        sys_.jump(v, out);
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
    for (std::size_t l = 0; l < out.size(); ++l) {
        if (sys_.pinned[l]) out[l] = 0.0;
    }
}

void DirkStepper::apply_full(std::span<const double> v, std::span<double> out) const {
    std::vector<double> j(v.size());
    spmv(sys_.ad, v, out);
    apply_jump(v, j);
    for (std::size_t l = 0; l < out.size(); ++l) out[l] = sys_.pinned[l] ? 0.0 : out[l] + j[l];
}

DirkStepper::IterationResult DirkStepper::iterate(std::span<const double> W, double theta_dt,
                                                  std::vector<double>& Y) const {
    const std::size_t M = sys_.size();
    const auto& V0 = sys_.obstacle;
    const SparseMatrix base = shifted_identity(sys_.ad, -theta_dt);
    std::vector<std::size_t> diag(M);
    for (std::size_t l = 0; l < M; ++l) diag[l] = base.find(l, l);

    auto mask_of = [&](const std::vector<double>& y) {
        std::vector<char> mask(M, 0);
        for (std::size_t l = 0; l < M; ++l) mask[l] = !sys_.pinned[l] && y[l] < V0[l];
        return mask;
    };

    IterationResult res;
    std::vector<char> mask_prev = mask_of(Y);
    std::vector<double> y_prev = Y;
    std::vector<double> jy(M), rhs(M);
    SparseMatrix A = base;

    for (std::size_t k = 1; k <= config_.max_inner; ++k) {
        apply_jump(y_prev, jy);
        // Row l of the system divided by its diagonal; the solution is unchanged.
        for (std::size_t l = 0; l < M; ++l) {
            double d = base.val[diag[l]];
            double b = sys_.pinned[l] ? W[l] : W[l] + theta_dt * jy[l];
            if (mask_prev[l]) {
                d += config_.large;
                b += config_.large * V0[l];
            }
            const double inv = 1.0 / d;
            for (std::size_t p = base.row_ptr[l]; p < base.row_ptr[l + 1]; ++p) A.val[p] = base.val[p] * inv;
            A.val[diag[l]] = 1.0;
            rhs[l] = b * inv;
        }
        const Ilu0Factors ilu(A);
        Y = y_prev;
        const SolveReport rep = bicgstab(A, rhs, Y, &ilu, config_.linear);
        res.linear_iterations += rep.iterations;
        res.kappa = k;

        double max_update = 0.0;
        for (std::size_t l = 0; l < M; ++l) {
            max_update = std::max(max_update, std::abs(Y[l] - y_prev[l]) / std::max(1.0, std::abs(Y[l])));
        }
        std::vector<char> mask = mask_of(Y);
        res.stopped_by_update = max_update < config_.tol;
        res.stopped_by_mask = mask == mask_prev;
        if (k >= config_.min_inner && (res.stopped_by_update || res.stopped_by_mask)) return res;
        mask_prev = std::move(mask);
        y_prev = Y;
    }
    throw std::runtime_error("penalty iteration did not stop within " + std::to_string(config_.max_inner) +
                             " iterations");
}

std::vector<double> DirkStepper::start_vector(const PricerState& state, double dt) const {
    std::vector<double> y = state.v_prev;
    const std::size_t n = state.n + 1;
    if (config_.extrapolate && n >= 2) {
        const double dt_prev = state.times[n - 1] - state.times[n - 2];
        const double ratio = dt / dt_prev;
        for (std::size_t l = 0; l < y.size(); ++l) y[l] += ratio * (state.v_prev[l] - state.v_prev2[l]);
    }
    return y;
}

void DirkStepper::finish_step(PricerState& state, std::vector<double> v_new, StepStats stats) const {
    state.v_prev2 = std::move(state.v_prev);
    state.v_prev = std::move(v_new);
    state.n = stats.n;
    if (config_.verbose) {
        std::fprintf(stderr, "step n=%zu dt=%.6e kappa1=%zu kappa2=%zu linear_iterations=%zu\n", stats.n,
                     stats.dt, stats.kappa1, stats.kappa2, stats.linear_iterations);
    }
    state.history.push_back(stats);
}

void DirkStepper::dirk_step(PricerState& state) const {
    const std::size_t n = state.n + 1;
    if (n >= state.times.size()) throw std::out_of_range("dirk_step: past the last time point");
    const double dt = state.times[n] - state.times[n - 1];
    const double theta = config_.theta;
    const std::size_t M = sys_.size();
    const auto& v = state.v_prev;

    std::vector<double> av(M);
    apply_full(v, av);
    std::vector<double> w1(M);
    for (std::size_t l = 0; l < M; ++l) w1[l] = v[l] + (1.0 - theta) * dt * av[l];

    const std::vector<double> start = start_vector(state, dt);
    std::vector<double> y = start;
    const auto r1 = iterate(w1, theta * dt, y);

    std::vector<double> ay(M);
    apply_full(y, ay);
    std::vector<double> w2(M);
    for (std::size_t l = 0; l < M; ++l) w2[l] = v[l] + 0.5 * dt * av[l] + (0.5 - theta) * dt * ay[l];

    std::vector<double> z = start;
    const auto r2 = iterate(w2, theta * dt, z);

    finish_step(state, std::move(z), {n, dt, r1.kappa, r2.kappa, r1.linear_iterations + r2.linear_iterations});
}

void DirkStepper::be_p_step(PricerState& state) const {
    const std::size_t n = state.n + 1;
    if (n >= state.times.size()) throw std::out_of_range("be_p_step: past the last time point");
    const double dt = state.times[n] - state.times[n - 1];
    std::vector<double> y = start_vector(state, dt);
    const auto r = iterate(state.v_prev, dt, y);
    finish_step(state, std::move(y), {n, dt, r.kappa, 0, r.linear_iterations});
}

void DirkStepper::step(PricerState& state) const {
    if (config_.damping && state.n + 1 <= 2) {
        be_p_step(state);
    } else {
        dirk_step(state);
    }
}

PidcpProblem::PidcpProblem(const KouModel& m, SpatialGrid g)
    : model(m), grid(std::make_shared<const SpatialGrid>(std::move(g))) {
    tables = std::make_shared<const JumpCoeffTables>(precompute_tables(*grid, model));
    system.ad = assemble_ad(*grid, model);
    system.obstacle = initial_vector(*grid);
    system.pinned.assign(grid->size(), 0);
    for (std::size_t j = 0; j <= grid->m; ++j) {
        for (std::size_t i = 0; i <= grid->m; ++i) {
            if (grid->is_far_boundary(i, j)) system.pinned[grid->index(i, j)] = 1;
        }
    }
    system.jump = [t = tables, gr = grid](std::span<const double> in, std::span<double> out) {
        apply(*t, *gr, in, out);
    };
}

PricingResult solve_american(const PidcpProblem& problem, const DirkConfig& config, double horizon) {
    const auto t0 = std::chrono::steady_clock::now();
    PricingResult out;
    if (horizon == 0.0) {
        out.v = problem.v0();
        return out;
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("solve_american: horizon must be >= 0");
    DirkStepper stepper(problem.system, config);
    PricerState state = stepper.initial_state(problem.v0(), time_grid(config.N, horizon));
    for (std::size_t n = 1; n <= config.N; ++n) stepper.step(state);
    out.v = std::move(state.v_prev);
    out.steps = std::move(state.history);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

PricingResult solve_american(const PidcpProblem& problem, const DirkConfig& config) {
    return solve_american(problem, config, problem.model.params().T);
}

PricingResult solve_american(const KouModel& model, const SpatialGrid& grid, const DirkConfig& config) {
    PidcpProblem problem(model, grid);
    return solve_american(problem, config);
}

}  // namespace kou2d
