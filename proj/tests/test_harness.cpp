#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "kou2d/harness.hpp"

using namespace kou2d;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
public:
    TempDir() : path_(std::filesystem::temp_directory_path() / ("kou2d_test_" + std::to_string(::getpid()) + "_" +
                                                                 std::to_string(counter_++))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

RunConfig tiny_config(const std::filesystem::path& dir) {
    RunConfig cfg;
    cfg.m = 20;
    cfg.reference_N = 6;
    cfg.out_dir = dir;
    cfg.cache_dir = dir / "cache";
    return cfg;
}

}  // namespace

TEST(Roi, OpenSquare) {
    const Roi roi{90.0, 110.0};
    EXPECT_TRUE(roi.contains(100.0, 95.0));
    EXPECT_FALSE(roi.contains(90.0, 100.0));
    EXPECT_FALSE(roi.contains(100.0, 110.0));
}

TEST(ReportingPoints, FivePointsAroundStrike) {
    const auto pts = reporting_points(100.0);
    EXPECT_EQ(pts[0], std::make_pair(90.0, 90.0));
    EXPECT_EQ(pts[1], std::make_pair(100.0, 90.0));
    EXPECT_EQ(pts[2], std::make_pair(100.0, 100.0));
    EXPECT_NEAR(pts[3].second, 110.0, 1e-12);
    EXPECT_NEAR(pts[4].first, 110.0, 1e-12);
}

TEST(TemporalError, RoiRestrictionAndGreeks) {
    const auto grid = build_grid(100, 100.0, 1000.0);
    const Roi roi{90.0, 110.0};
    std::vector<double> ref(grid.size());
    for (std::size_t l = 0; l < ref.size(); ++l) ref[l] = std::sin(0.01 * l);
    for (Quantity q : kAllQuantities) EXPECT_EQ(temporal_error(ref, ref, grid, roi, q), 0.0);

    auto shifted = ref;
    for (std::size_t j = 0; j <= grid.m; ++j)
        for (std::size_t i = 0; i <= grid.m; ++i)
            if (grid.nodes[i] > 150.0 || grid.nodes[j] > 150.0) shifted[grid.index(i, j)] += 3.0;
    for (Quantity q : kAllQuantities) EXPECT_EQ(temporal_error(ref, shifted, grid, roi, q), 0.0);

    // a bump on the ROI node (100, 100) shows up in the value and in the Gammas
    auto bumped = ref;
    bumped[grid.index(25, 25)] += 1e-3;
    EXPECT_NEAR(temporal_error(ref, bumped, grid, roi, Quantity::value), 1e-3, 1e-15);
    EXPECT_NEAR(temporal_error(ref, bumped, grid, roi, Quantity::gamma11), 2e-3 / 16.0, 1e-12);

    EXPECT_THROW(temporal_error(ref, ref, grid, Roi{101.0, 103.0}, Quantity::value), std::invalid_argument);
    EXPECT_THROW(temporal_error(ref, std::vector<double>(3), grid, roi, Quantity::value), std::invalid_argument);
}

TEST(FitSlope, RecoversPowerLaw) {
    const std::vector<std::size_t> N{10, 20, 40, 80};
    std::vector<double> e;
    for (auto n : N) e.push_back(3.5 / (double(n) * n));
    EXPECT_NEAR(fit_slope(N, e), 2.0, 1e-12);
    EXPECT_THROW(fit_slope(std::vector<std::size_t>{10}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(ReferenceCache, WarmRunLoadsIdenticalBytes) {
    TempDir dir;
    const RunConfig cfg = tiny_config(dir.path());
    PidcpProblem prob(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const auto first = run_reference(cfg, prob);
    EXPECT_FALSE(first.cache_hit);
    EXPECT_EQ(first.steps.size(), cfg.reference_N);
    const auto path = reference_path(cfg, cfg.m);
    ASSERT_TRUE(std::filesystem::exists(path));
    const std::string bytes = slurp(path);

    const auto second = run_reference(cfg, prob);
    EXPECT_TRUE(second.cache_hit);
    EXPECT_TRUE(second.steps.empty());
    EXPECT_EQ(first.v, second.v);
    EXPECT_EQ(slurp(path), bytes);
    for (Quantity q : kAllQuantities)
        EXPECT_EQ(temporal_error(first.v, second.v, *prob.grid, cfg.roi(), q), 0.0);
}

TEST(ReferenceCache, KeyTracksInputs) {
    TempDir dir;
    RunConfig a = tiny_config(dir.path());
    RunConfig b = a;
    b.params.sigma1 = 0.31;
    EXPECT_NE(reference_key(a, 20), reference_key(b, 20));
    EXPECT_NE(reference_key(a, 20), reference_key(a, 40));
    b = a;
    b.reference_N = 7;
    EXPECT_NE(reference_key(a, 20), reference_key(b, 20));

    const auto path = dir.path() / "ref.bin";
    const std::vector<double> v(21 * 21, 1.25);
    write_reference(path, 20, 99, v);
    std::vector<double> back;
    EXPECT_TRUE(read_reference(path, 20, 99, back));
    EXPECT_EQ(back, v);
    EXPECT_FALSE(read_reference(path, 20, 98, back));
    EXPECT_FALSE(read_reference(path, 21, 99, back));
    EXPECT_FALSE(read_reference(dir.path() / "absent.bin", 20, 99, back));
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.put('X');
    }
    EXPECT_FALSE(read_reference(path, 20, 99, back));
}

TEST(ConvergenceStudy, CsvRoundTripRefitsIdentically) {
    TempDir dir;
    const RunConfig cfg = tiny_config(dir.path());
    PidcpProblem prob(KouModel(cfg.params), make_grid(cfg, cfg.m));
    const auto ref = run_reference(cfg, prob);
    const std::vector<Variant> variants{Variant::a, Variant::d};
    const std::vector<std::size_t> Ns{2, 3};
    const auto study = run_convergence_study(cfg, prob, ref.v, variants, Ns);
    EXPECT_EQ(study.records.size(), 2u * 2u * 6u);
    EXPECT_EQ(study.fits.size(), 2u * 6u);
    for (const auto& r : study.records) EXPECT_GE(r.error, 0.0);

    std::stringstream csv;
    write_convergence_csv(csv, study.records);
    const auto back = read_convergence_csv(csv);
    ASSERT_EQ(back.size(), study.records.size());
    const auto refit = fit_records(back);
    std::ostringstream s1, s2;
    write_slope_csv(s1, study.fits);
    write_slope_csv(s2, refit);
    EXPECT_EQ(s1.str(), s2.str());
    for (std::size_t i = 0; i < refit.size(); ++i) EXPECT_EQ(refit[i].slope, study.fits[i].slope);
}

TEST(ConvergenceCsv, RejectsUnknownQuantity) {
    std::istringstream in("m,variant,N,quantity,error\n100,DIRKa,10,vega,1e-3\n");
    EXPECT_THROW(read_convergence_csv(in), std::runtime_error);
}

TEST(PointTables, OrdersOfSyntheticLadder) {
    PointTable c, m, f;
    for (std::size_t q = 0; q < 6; ++q) {
        for (std::size_t p = 0; p < 5; ++p) {
            const double base = 1.0 + q + 0.1 * p, k = 0.3 + 0.05 * p;
            c.values[q][p] = base + k * 16.0;
            m.values[q][p] = base + k * 4.0;
            f.values[q][p] = base + k * 1.0;
        }
    }
    const auto orders = numerical_orders(c, m, f);
    for (const auto& row : orders)
        for (double o : row) EXPECT_NEAR(o, 2.0, 1e-12);
    std::ostringstream out;
    write_orders_csv(out, orders, 100.0);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "quantity,(90;90),(100;90),(100;100),(100;110),(110;110)");
}

TEST(PointTables, TabulatesInterpolatedValues) {
    const auto grid = build_grid(50, 100.0, 1000.0);
    PricingResult pr;
    pr.v.resize(grid.size());
    for (std::size_t j = 0; j <= grid.m; ++j)
        for (std::size_t i = 0; i <= grid.m; ++i) pr.v[grid.index(i, j)] = grid.nodes[i] * grid.nodes[j];
    const auto t = point_table(pr, grid, 100.0);
    EXPECT_NEAR(t.values[0][0], 8100.0, 1e-9);
    EXPECT_NEAR(t.values[1][3], 110.0, 1e-9);   // delta1 = s2
    EXPECT_NEAR(t.values[2][1], 100.0, 1e-9);   // delta2 = s1
    EXPECT_NEAR(t.values[4][2], 1.0, 1e-9);     // gamma12
    EXPECT_NEAR(t.values[3][4], 0.0, 1e-9);     // gamma11
    std::ostringstream out;
    write_point_table_csv(out, std::vector<PointTable>{t}, 100.0);
    std::istringstream in(out.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 7u);
}

TEST(ExerciseRegion, TrivialCases) {
    const std::vector<double> v0{10.0, 0.0, 5.0};
    const std::vector<double> high{11.0, 1.0, 7.0};
    for (char c : exercise_region(high, v0)) EXPECT_EQ(c, 0);
    for (char c : exercise_region(v0, v0)) EXPECT_EQ(c, 1);
    const std::vector<double> close{10.0 + 5e-6, 2e-6, 5.1};
    EXPECT_EQ(exercise_region(close, v0), (std::vector<char>{1, 0, 0}));
    EXPECT_THROW(exercise_region(high, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(ExerciseRegion, CsvTriplets) {
    const auto grid = build_grid(10, 100.0, 500.0);
    std::vector<char> mask(grid.size(), 0);
    mask[grid.index(1, 2)] = 1;
    std::ostringstream out;
    write_region_csv(out, mask, grid, 200.0);
    const std::string s = out.str();
    EXPECT_EQ(s.rfind("s1,s2,exercise\n", 0), 0u);
    EXPECT_NE(s.find("\n40,80,1\n"), std::string::npos);
    EXPECT_NE(s.find("\n0,0,0\n"), std::string::npos);
}

TEST(Fmt9, NineSignificantDigits) {
    EXPECT_EQ(fmt9(14.4121903456), "14.4121903");
    EXPECT_EQ(fmt9(0.00454164598123), "0.00454164598");
    EXPECT_EQ(fmt9(2.0), "2");
}
