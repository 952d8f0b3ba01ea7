#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "kou2d/config.hpp"
#include "kou2d/dirk_pricer.hpp"
#include "kou2d/greeks.hpp"
#include "kou2d/kou_model.hpp"
#include "kou2d/spatial_grid.hpp"

namespace kou2d {

/// Open square (lo, hi)^2 in currency units.
struct Roi {
    double lo;
    double hi;
    bool contains(double s1, double s2) const { return s1 > lo && s1 < hi && s2 > lo && s2 < hi; }
};

struct RunConfig {
    KouParams params{};
    std::size_t m = 100;
    double smax_multiple = 10.0;
    Variant variant = Variant::a;
    std::size_t N = 50;
    std::vector<std::size_t> n_sweep{10, 20, 40, 80};
    std::vector<std::size_t> ladder_m{100, 200, 400};
    double roi_lower = 0.9;  // in units of K
    double roi_upper = 1.1;
    std::size_t reference_N = 500;
    double penalty_large = 1e7;
    double penalty_tol = 1e-7;
    double linear_rel_tol = 1e-10;
    std::filesystem::path out_dir = "out";
    std::filesystem::path cache_dir = "out/cache";
    bool verbose = false;

    Roi roi() const { return {roi_lower * params.K, roi_upper * params.K}; }
    double smax() const { return smax_multiple * params.K; }

    /// Stepper settings for one variant with this run's penalty and solver constants.
    DirkConfig dirk(Variant v, std::size_t steps) const;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;

    /// Defaults overridden by any keys present in the file.
    static RunConfig from_config(const ConfigFile& file);
};

SpatialGrid make_grid(const RunConfig& cfg, std::size_t m);

/// The five reporting points (0.9K,0.9K), (K,0.9K), (K,K), (K,1.1K), (1.1K,1.1K).
std::array<std::pair<double, double>, 5> reporting_points(double strike);

// --- reference solutions --------------------------------------------------

std::uint64_t reference_key(const RunConfig& cfg, std::size_t m);
std::filesystem::path reference_path(const RunConfig& cfg, std::size_t m);

void write_reference(const std::filesystem::path& path, std::size_t m, std::uint64_t key,
                     std::span<const double> v);
/// Empty optional-like result: returns false when the file is absent or the header does not match.
bool read_reference(const std::filesystem::path& path, std::size_t m, std::uint64_t key, std::vector<double>& v);

struct ReferenceResult {
    std::vector<double> v;
    bool cache_hit = false;
    std::vector<StepStats> steps;  // empty on a cache hit
};

/// DIRKa with reference_N steps on grid m, persisted under cache_dir.
ReferenceResult run_reference(const RunConfig& cfg, const PidcpProblem& problem);

// --- errors and studies ---------------------------------------------------

/// Max-norm difference over nodes strictly inside the ROI; Greeks are formed
/// from each vector first. Throws when no node lies inside the ROI.
double temporal_error(std::span<const double> v_ref, std::span<const double> v_hat, const SpatialGrid& grid,
                      const Roi& roi, Quantity q);

struct ErrorRecord {
    std::size_t m;
    std::size_t N;
    Variant variant;
    Quantity quantity;
    double error;
};

struct SlopeFit {
    Variant variant;
    Quantity quantity;
    double slope;
    std::size_t last_N;
    double last_error;
    double error_constant;  // last_error * last_N^2
};

/// Least-squares slope of log(error) against log(1/N).
double fit_slope(std::span<const std::size_t> N, std::span<const double> errors);

struct ConvergenceStudy {
    std::vector<ErrorRecord> records;
    std::vector<SlopeFit> fits;
};

ConvergenceStudy run_convergence_study(const RunConfig& cfg, const PidcpProblem& problem,
                                       std::span<const double> v_ref, std::span<const Variant> variants,
                                       std::span<const std::size_t> N_list);

std::vector<SlopeFit> fit_records(std::span<const ErrorRecord> records);

void write_convergence_csv(std::ostream& out, std::span<const ErrorRecord> records);
void write_slope_csv(std::ostream& out, std::span<const SlopeFit> fits);
std::vector<ErrorRecord> read_convergence_csv(std::istream& in);

// --- point tables -----------------------------------------------------------

struct PointTable {
    std::size_t m = 0;
    std::size_t N = 0;
    /// values[q][p]: quantity q (kAllQuantities order) at reporting point p
    std::array<std::array<double, 5>, 6> values{};
    std::vector<StepStats> steps;
    double seconds = 0.0;
};

PointTable point_table(const PricingResult& result, const SpatialGrid& grid, double strike);

/// Prices each m with N = m/2 (DIRKa) and tabulates the reporting points.
std::vector<PointTable> run_point_table(const RunConfig& cfg, std::span<const std::size_t> ladder_m);

/// orders[q][p] = log2(|d_coarse| / |d_fine|) for three consecutive tables.
std::array<std::array<double, 5>, 6> numerical_orders(const PointTable& coarse, const PointTable& mid,
                                                      const PointTable& fine);

void write_point_table_csv(std::ostream& out, std::span<const PointTable> tables, double strike);
void write_orders_csv(std::ostream& out, const std::array<std::array<double, 5>, 6>& orders, double strike);

// --- exercise region --------------------------------------------------------

/// 1 where V - V0 <= 1e-6 max(1, V0).
std::vector<char> exercise_region(std::span<const double> v_hat, std::span<const double> v0);
void write_region_csv(std::ostream& out, std::span<const char> mask, const SpatialGrid& grid, double s_limit);

/// "%.9g"
std::string fmt9(double x);

}  // namespace kou2d
