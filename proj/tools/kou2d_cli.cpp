// Command-line driver: pricing runs, reference solutions, convergence studies
// and plot data for American put-on-the-average options under two-asset Kou.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "kou2d/config.hpp"
#include "kou2d/dirk_pricer.hpp"
#include "kou2d/fd_operator.hpp"
#include "kou2d/greeks.hpp"
#include "kou2d/harness.hpp"

namespace fs = std::filesystem;
using namespace kou2d;

namespace {

struct CommonOptions {
    std::string config_path;
    std::size_t m = 0;
    std::size_t N = 0;
    std::string variant;
    std::string out;
    bool verbose = false;
};

RunConfig resolve(const CommonOptions& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : RunConfig::from_config(ConfigFile::load(o.config_path));
    if (o.m) cfg.m = o.m;
    if (o.N) cfg.N = o.N;
    if (!o.variant.empty()) cfg.variant = parse_variant(o.variant);
    if (!o.out.empty()) {
        const bool default_cache = cfg.cache_dir == cfg.out_dir / "cache";
        cfg.out_dir = o.out;
        if (default_cache) cfg.cache_dir = cfg.out_dir / "cache";
    }
    cfg.verbose = o.verbose;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

void print_kappa_summary(const std::vector<StepStats>& steps) {
    std::size_t kmin = SIZE_MAX, kmax = 0, lin = 0;
    for (const auto& s : steps) {
        for (std::size_t k : {s.kappa1, s.kappa2}) {
            if (k == 0) continue;
            kmin = std::min(kmin, k);
            kmax = std::max(kmax, k);
        }
        lin += s.linear_iterations;
    }
    std::fprintf(stderr, "steps=%zu kappa_min=%zu kappa_max=%zu linear_iterations=%zu\n", steps.size(),
                 steps.empty() ? 0 : kmin, kmax, lin);
}

int cmd_price(const CommonOptions& o, bool dump_matrix) {
    const RunConfig cfg = resolve(o);
    PidcpProblem problem(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const DirkConfig dc = cfg.dirk(cfg.variant, cfg.N);
    if (dump_matrix) {
        auto f = open_out(cfg.out_dir / ("AD_m" + std::to_string(cfg.m) + ".mtx"));
        write_matrix_market(f, problem.system.ad);
    }
    const PricingResult pr = solve_american(problem, dc);
    const PointTable t = point_table(pr, *problem.grid, cfg.params.K);
    write_point_table_csv(std::cout, std::span(&t, 1), cfg.params.K);
    print_kappa_summary(pr.steps);
    std::fprintf(stderr, "seconds=%.3f\n", pr.seconds);
    return 0;
}

int cmd_reference(const CommonOptions& o) {
    const RunConfig cfg = resolve(o);
    PidcpProblem problem(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const ReferenceResult ref = run_reference(cfg, problem);
    std::cout << reference_path(cfg, cfg.m).string() << (ref.cache_hit ? " (cached)" : " (computed)") << '\n';
    if (!ref.cache_hit) print_kappa_summary(ref.steps);
    return 0;
}

int cmd_converge(const CommonOptions& o) {
    const RunConfig cfg = resolve(o);
    PidcpProblem problem(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const ReferenceResult ref = run_reference(cfg, problem);
    std::vector<Variant> variants{Variant::a, Variant::b, Variant::c, Variant::d};
    if (!o.variant.empty()) variants = {cfg.variant};
    const ConvergenceStudy study = run_convergence_study(cfg, problem, ref.v, variants, cfg.n_sweep);
    const std::string tag = "m" + std::to_string(cfg.m);
    {
        auto f = open_out(cfg.out_dir / ("convergence_" + tag + ".csv"));
        write_convergence_csv(f, study.records);
    }
    {
        auto f = open_out(cfg.out_dir / ("slopes_" + tag + ".csv"));
        write_slope_csv(f, study.fits);
    }
    write_slope_csv(std::cout, study.fits);
    return 0;
}

int cmd_table(const CommonOptions& o) {
    const RunConfig cfg = resolve(o);
    const auto tables = run_point_table(cfg, cfg.ladder_m);
    {
        auto f = open_out(cfg.out_dir / "point_tables.csv");
        write_point_table_csv(f, tables, cfg.params.K);
    }
    write_point_table_csv(std::cout, tables, cfg.params.K);
    for (const auto& t : tables) {
        std::fprintf(stderr, "m=%zu N=%zu seconds=%.1f ", t.m, t.N, t.seconds);
        print_kappa_summary(t.steps);
    }
    for (std::size_t k = 0; k + 2 < tables.size(); ++k) {
        const auto orders = numerical_orders(tables[k], tables[k + 1], tables[k + 2]);
        auto f = open_out(cfg.out_dir / ("orders_m" + std::to_string(tables[k + 2].m) + ".csv"));
        write_orders_csv(f, orders, cfg.params.K);
        write_orders_csv(std::cout, orders, cfg.params.K);
    }
    return 0;
}

int cmd_region(const CommonOptions& o) {
    const RunConfig cfg = resolve(o);
    PidcpProblem problem(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const DirkConfig dc = cfg.dirk(cfg.variant, cfg.N);
    const PricingResult pr = solve_american(problem, dc);
    const auto mask = exercise_region(pr.v, problem.v0());
    auto f = open_out(cfg.out_dir / ("exercise_region_m" + std::to_string(cfg.m) + ".csv"));
    write_region_csv(f, mask, *problem.grid, 2.0 * cfg.params.K);
    std::size_t inside = 0;
    const Roi roi = cfg.roi();
    for (std::size_t j = 0; j <= cfg.m; ++j) {
        for (std::size_t i = 0; i <= cfg.m; ++i) {
            if (mask[problem.grid->index(i, j)] && roi.contains(problem.grid->nodes[i], problem.grid->nodes[j])) {
                ++inside;
            }
        }
    }
    std::cout << "exercise nodes inside ROI: " << inside << '\n';
    return 0;
}

int cmd_surface(const CommonOptions& o) {
    const RunConfig cfg = resolve(o);
    PidcpProblem problem(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const DirkConfig dc = cfg.dirk(cfg.variant, cfg.N);
    const PricingResult pr = solve_american(problem, dc);
    const GreeksSurfaces g = compute_greeks(pr.v, *problem.grid);
    const std::string tag = "_m" + std::to_string(cfg.m) + ".csv";
    for (Quantity q : kAllQuantities) {
        auto f = open_out(cfg.out_dir / ("surface_" + quantity_name(q) + tag));
        write_surface_csv(f, surface_of(g, pr.v, q), *problem.grid, 2.0 * cfg.params.K);
    }
    auto f = open_out(cfg.out_dir / ("grid" + tag));
    write_grid_csv(f, *problem.grid);
    std::cout << "wrote surfaces to " << cfg.out_dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"American put-on-the-average pricing under the two-asset Kou model"};
    app.require_subcommand(1);
    CommonOptions opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--m", opts.m, "spatial intervals per direction");
        sub->add_option("--N", opts.N, "number of time steps");
        sub->add_option("--variant", opts.variant, "DIRK variant")->check(CLI::IsMember({"a", "b", "c", "d"}));
        sub->add_option("--out", opts.out, "output directory");
        sub->add_flag("--verbose", opts.verbose, "per-step diagnostics on stderr");
    };

    bool dump_matrix = false;
    auto* price = app.add_subcommand("price", "single run; prints value and Greeks at the reporting points");
    add_common(price);
    price->add_flag("--dump-matrix", dump_matrix, "write A_D in Matrix Market format to the output directory");
    auto* reference = app.add_subcommand("reference", "build or load the cached DIRKa reference solution");
    add_common(reference);
    auto* converge = app.add_subcommand("converge", "temporal error sweep over N against the reference");
    add_common(converge);
    auto* table = app.add_subcommand("table", "point tables on the (m, m/2) ladder and convergence orders");
    add_common(table);
    auto* region = app.add_subcommand("region", "early exercise region at maturity as CSV");
    add_common(region);
    auto* surface = app.add_subcommand("surface", "value and Greek surfaces as CSV grids");
    add_common(surface);

    CLI11_PARSE(app, argc, argv);

    try {
        if (price->parsed()) return cmd_price(opts, dump_matrix);
        if (reference->parsed()) return cmd_reference(opts);
        if (converge->parsed()) return cmd_converge(opts);
        if (table->parsed()) return cmd_table(opts);
        if (region->parsed()) return cmd_region(opts);
        if (surface->parsed()) return cmd_surface(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
