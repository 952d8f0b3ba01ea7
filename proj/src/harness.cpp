#include "kou2d/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace kou2d {

std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

void RunConfig::validate() const {
    params.validate();
    if (m < 3) throw std::invalid_argument("run config: m must be >= 3");
    if (N < 1) throw std::invalid_argument("run config: N must be >= 1");
    if (!(smax_multiple > 2.0)) throw std::invalid_argument("run config: smax_multiple must exceed 2");
    if (!(roi_lower > 0.0 && roi_upper > roi_lower && roi_upper < smax_multiple)) {
        throw std::invalid_argument("run config: ROI must lie strictly inside (0, Smax)");
    }
    if (!(penalty_large > 0.0) || !(penalty_tol > 0.0) || !(linear_rel_tol > 0.0)) {
        throw std::invalid_argument("run config: penalty and solver constants must be positive");
    }
    if (reference_N < 1) throw std::invalid_argument("run config: reference_N must be >= 1");
    for (auto n : n_sweep) {
        if (n < 1) throw std::invalid_argument("run config: N sweep entries must be >= 1");
    }
}

DirkConfig RunConfig::dirk(Variant v, std::size_t steps) const {
    DirkConfig dc = DirkConfig::for_variant(v, steps);
    dc.large = penalty_large;
    dc.tol = penalty_tol;
    dc.linear.rel_tol = linear_rel_tol;
    dc.verbose = verbose;
    return dc;
}

RunConfig RunConfig::from_config(const ConfigFile& file) {
    RunConfig cfg;
    cfg.params = params_from_config(file);
    auto count = [](double v, const char* key) {
        if (!(v >= 1.0) || v != std::floor(v)) {
            throw std::invalid_argument(std::string("run config: ") + key + " must be a positive integer");
        }
        return static_cast<std::size_t>(v);
    };
    if (auto v = file.number("m")) cfg.m = count(*v, "m");
    if (auto v = file.number("N")) cfg.N = count(*v, "N");
    if (auto v = file.number("smax_multiple")) cfg.smax_multiple = *v;
    if (auto v = file.number("roi_lower")) cfg.roi_lower = *v;
    if (auto v = file.number("roi_upper")) cfg.roi_upper = *v;
    if (auto v = file.number("reference_N")) cfg.reference_N = count(*v, "reference_N");
    if (auto v = file.number("penalty_large")) cfg.penalty_large = *v;
    if (auto v = file.number("penalty_tol")) cfg.penalty_tol = *v;
    if (auto v = file.number("linear_rel_tol")) cfg.linear_rel_tol = *v;
    if (auto v = file.string("variant")) cfg.variant = parse_variant(*v);
    if (auto v = file.string("out_dir")) cfg.out_dir = *v;
    if (auto v = file.string("cache_dir")) {
        cfg.cache_dir = *v;
    } else {
        cfg.cache_dir = cfg.out_dir / "cache";
    }
    if (auto v = file.list("N_sweep")) {
        cfg.n_sweep.clear();
        for (double x : *v) cfg.n_sweep.push_back(count(x, "N_sweep"));
    }
    if (auto v = file.list("ladder_m")) {
        cfg.ladder_m.clear();
        for (double x : *v) cfg.ladder_m.push_back(count(x, "ladder_m"));
    }
    cfg.validate();
    return cfg;
}

SpatialGrid make_grid(const RunConfig& cfg, std::size_t m) {
    return build_grid(m, cfg.params.K, cfg.smax());
}

std::array<std::pair<double, double>, 5> reporting_points(double K) {
    return {{{0.9 * K, 0.9 * K}, {K, 0.9 * K}, {K, K}, {K, 1.1 * K}, {1.1 * K, 1.1 * K}}};
}

// --- reference -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'K', 'O', 'U', '2', 'D', 'R', 'E', 'F'};

std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
    for (int b = 0; b < 8; ++b) {
        h ^= (x >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t reference_key(const RunConfig& cfg, std::size_t m) {
    std::uint64_t h = cfg.params.fingerprint();
    h = mix(h, m);
    h = mix(h, cfg.reference_N);
    for (double x : {cfg.penalty_large, cfg.penalty_tol, cfg.linear_rel_tol}) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &x, sizeof bits);
        h = mix(h, bits);
    }
    std::uint64_t smax_bits = 0;
    std::memcpy(&smax_bits, &cfg.smax_multiple, sizeof smax_bits);
    return mix(h, smax_bits);
}

std::filesystem::path reference_path(const RunConfig& cfg, std::size_t m) {
    char name[96];
    std::snprintf(name, sizeof name, "reference_m%zu_%016llx.bin", m,
                  static_cast<unsigned long long>(reference_key(cfg, m)));
    return cfg.cache_dir / name;
}

void write_reference(const std::filesystem::path& path, std::size_t m, std::uint64_t key,
                     std::span<const double> v) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("reference: cannot write " + tmp);
        const std::uint64_t header[3] = {static_cast<std::uint64_t>(m), key, static_cast<std::uint64_t>(v.size())};
        out.write(kMagic, sizeof kMagic);
        out.write(reinterpret_cast<const char*>(header), sizeof header);
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!out) throw std::runtime_error("reference: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

bool read_reference(const std::filesystem::path& path, std::size_t m, std::uint64_t key, std::vector<double>& v) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    std::uint64_t header[3];
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) return false;
    if (header[0] != m || header[1] != key || header[2] != (m + 1) * (m + 1)) return false;
    v.resize(header[2]);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    return static_cast<bool>(in);
}

ReferenceResult run_reference(const RunConfig& cfg, const PidcpProblem& problem) {
    const std::size_t m = problem.grid->m;
    const auto path = reference_path(cfg, m);
    const auto key = reference_key(cfg, m);
    ReferenceResult res;
    if (read_reference(path, m, key, res.v)) {
        res.cache_hit = true;
        return res;
    }
    const DirkConfig dc = cfg.dirk(Variant::a, cfg.reference_N);
    PricingResult pr = solve_american(problem, dc);
    write_reference(path, m, key, pr.v);
    res.v = std::move(pr.v);
    res.steps = std::move(pr.steps);
    return res;
}

// --- errors ----------------------------------------------------------------

double temporal_error(std::span<const double> v_ref, std::span<const double> v_hat, const SpatialGrid& grid,
                      const Roi& roi, Quantity q) {
    if (v_ref.size() != grid.size() || v_hat.size() != grid.size()) {
        throw std::invalid_argument("temporal_error: vectors not on this grid");
    }
    GreeksSurfaces g_ref, g_hat;
    if (q != Quantity::value) {
        g_ref = compute_greeks(v_ref, grid);
        g_hat = compute_greeks(v_hat, grid);
    }
    const auto a = surface_of(g_ref, v_ref, q);
    const auto b = surface_of(g_hat, v_hat, q);
    double err = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j <= grid.m; ++j) {
        for (std::size_t i = 0; i <= grid.m; ++i) {
            if (!roi.contains(grid.nodes[i], grid.nodes[j])) continue;
            const std::size_t idx = grid.index(i, j);
            err = std::max(err, std::abs(a[idx] - b[idx]));
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("temporal_error: no grid node inside the ROI");
    return err;
}

double fit_slope(std::span<const std::size_t> N, std::span<const double> errors) {
    if (N.size() != errors.size() || N.size() < 2) throw std::invalid_argument("fit_slope: need >= 2 points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double k = static_cast<double>(N.size());
    for (std::size_t i = 0; i < N.size(); ++i) {
        const double x = std::log(1.0 / static_cast<double>(N[i]));
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

std::vector<SlopeFit> fit_records(std::span<const ErrorRecord> records) {
    std::vector<SlopeFit> fits;
    for (Variant v : {Variant::a, Variant::b, Variant::c, Variant::d}) {
        for (Quantity q : kAllQuantities) {
            std::vector<std::size_t> ns;
            std::vector<double> es;
            for (const auto& r : records) {
                if (r.variant == v && r.quantity == q) {
                    ns.push_back(r.N);
                    es.push_back(r.error);
                }
            }
            if (ns.size() < 2) continue;
            const auto last = static_cast<std::size_t>(std::max_element(ns.begin(), ns.end()) - ns.begin());
            const double nl = static_cast<double>(ns[last]);
            fits.push_back({v, q, fit_slope(ns, es), ns[last], es[last], es[last] * nl * nl});
        }
    }
    return fits;
}

ConvergenceStudy run_convergence_study(const RunConfig& cfg, const PidcpProblem& problem,
                                       std::span<const double> v_ref, std::span<const Variant> variants,
                                       std::span<const std::size_t> N_list) {
    ConvergenceStudy study;
    const SpatialGrid& grid = *problem.grid;
    const Roi roi = cfg.roi();
    for (Variant v : variants) {
        for (std::size_t N : N_list) {
            const DirkConfig dc = cfg.dirk(v, N);
            const PricingResult pr = solve_american(problem, dc);
            for (Quantity q : kAllQuantities) {
                // Stored as emitted so a re-read CSV re-fits to identical slopes.
                const double e = std::stod(fmt9(temporal_error(v_ref, pr.v, grid, roi, q)));
                study.records.push_back({grid.m, N, v, q, e});
            }
        }
    }
    study.fits = fit_records(study.records);
    return study;
}

void write_convergence_csv(std::ostream& out, std::span<const ErrorRecord> records) {
    out << "m,variant,N,quantity,error\n";
    for (const auto& r : records) {
        out << r.m << ',' << variant_name(r.variant) << ',' << r.N << ',' << quantity_name(r.quantity) << ','
            << fmt9(r.error) << '\n';
    }
}

void write_slope_csv(std::ostream& out, std::span<const SlopeFit> fits) {
    out << "variant,quantity,slope,last_N,last_error,error_constant\n";
    for (const auto& f : fits) {
        out << variant_name(f.variant) << ',' << quantity_name(f.quantity) << ',' << fmt9(f.slope) << ','
            << f.last_N << ',' << fmt9(f.last_error) << ',' << fmt9(f.error_constant) << '\n';
    }
}

std::vector<ErrorRecord> read_convergence_csv(std::istream& in) {
    std::vector<ErrorRecord> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string m, variant, N, quantity, error;
        std::getline(ss, m, ',');
        std::getline(ss, variant, ',');
        std::getline(ss, N, ',');
        std::getline(ss, quantity, ',');
        std::getline(ss, error, ',');
        Quantity q = Quantity::value;
        bool found = false;
        for (Quantity c : kAllQuantities) {
            if (quantity_name(c) == quantity) {
                q = c;
                found = true;
            }
        }
        if (!found) throw std::runtime_error("convergence csv: unknown quantity " + quantity);
        out.push_back({std::stoul(m), std::stoul(N), parse_variant(variant), q, std::stod(error)});
    }
    return out;
}

// --- point tables ------------------------------------------------------------

PointTable point_table(const PricingResult& result, const SpatialGrid& grid, double strike) {
    PointTable t;
    t.m = grid.m;
    t.N = result.steps.size();
    t.steps = result.steps;
    t.seconds = result.seconds;
    const GreeksSurfaces g = compute_greeks(result.v, grid);
    const auto pts = reporting_points(strike);
    for (std::size_t q = 0; q < kAllQuantities.size(); ++q) {
        const auto surf = surface_of(g, result.v, kAllQuantities[q]);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            t.values[q][p] = interpolate_at(surf, grid, pts[p].first, pts[p].second);
        }
    }
    return t;
}

std::vector<PointTable> run_point_table(const RunConfig& cfg, std::span<const std::size_t> ladder_m) {
    const KouModel model(cfg.params);
    std::vector<PointTable> tables;
    for (std::size_t m : ladder_m) {
        PidcpProblem problem(model, make_grid(cfg, m));
        const DirkConfig dc = cfg.dirk(Variant::a, std::max<std::size_t>(1, m / 2));
        const PricingResult pr = solve_american(problem, dc);
        tables.push_back(point_table(pr, *problem.grid, cfg.params.K));
    }
    return tables;
}

std::array<std::array<double, 5>, 6> numerical_orders(const PointTable& coarse, const PointTable& mid,
                                                      const PointTable& fine) {
    std::array<std::array<double, 5>, 6> orders{};
    for (std::size_t q = 0; q < 6; ++q) {
        for (std::size_t p = 0; p < 5; ++p) {
            const double dc = mid.values[q][p] - coarse.values[q][p];
            const double df = fine.values[q][p] - mid.values[q][p];
            orders[q][p] = std::log2(std::abs(dc) / std::abs(df));
        }
    }
    return orders;
}

namespace {

std::string point_header(double strike) {
    std::string h;
    for (const auto& [s1, s2] : reporting_points(strike)) {
        h += ",(" + fmt9(s1) + ";" + fmt9(s2) + ")";
    }
    return h;
}

}  // namespace

void write_point_table_csv(std::ostream& out, std::span<const PointTable> tables, double strike) {
    out << "m,N,quantity" << point_header(strike) << '\n';
    for (const auto& t : tables) {
        for (std::size_t q = 0; q < 6; ++q) {
            out << t.m << ',' << t.N << ',' << quantity_name(kAllQuantities[q]);
            for (double v : t.values[q]) out << ',' << fmt9(v);
            out << '\n';
        }
    }
}

void write_orders_csv(std::ostream& out, const std::array<std::array<double, 5>, 6>& orders, double strike) {
    out << "quantity" << point_header(strike) << '\n';
    for (std::size_t q = 0; q < 6; ++q) {
        out << quantity_name(kAllQuantities[q]);
        for (double v : orders[q]) out << ',' << fmt9(v);
        out << '\n';
    }
}

// --- exercise region -----------------------------------------------------------

std::vector<char> exercise_region(std::span<const double> v_hat, std::span<const double> v0) {
    if (v_hat.size() != v0.size()) throw std::invalid_argument("exercise_region: size mismatch");
    std::vector<char> mask(v_hat.size());
    for (std::size_t l = 0; l < v_hat.size(); ++l) {
        mask[l] = v_hat[l] - v0[l] <= 1e-6 * std::max(1.0, v0[l]);
    }
    return mask;
}

void write_region_csv(std::ostream& out, std::span<const char> mask, const SpatialGrid& grid, double s_limit) {
    out << "s1,s2,exercise\n";
    for (std::size_t j = 0; j <= grid.m; ++j) {
        if (grid.nodes[j] > s_limit) break;
        for (std::size_t i = 0; i <= grid.m; ++i) {
            if (grid.nodes[i] > s_limit) break;
            out << fmt9(grid.nodes[i]) << ',' << fmt9(grid.nodes[j]) << ',' << (mask[grid.index(i, j)] ? 1 : 0)
                << '\n';
        }
    }
}

}  // namespace kou2d
