#include <benchmark/benchmark.h>

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "kou2d/fd_operator.hpp"
#include "kou2d/jump_integral.hpp"
#include "kou2d/sparse.hpp"

using namespace kou2d;

namespace {

struct Fixture {
    SpatialGrid grid;
    JumpCoeffTables tables;
    SparseMatrix ad;
    std::vector<double> v;
    std::vector<double> out;
};

// Built once per grid size and shared by every kernel benchmark.
const Fixture& fixture(std::size_t m) {
    static std::map<std::size_t, std::unique_ptr<Fixture>> cache;
    auto& slot = cache[m];
    if (!slot) {
        const KouModel model(KouParams{});
        auto f = std::make_unique<Fixture>();
        f->grid = build_grid(m, 100.0, 1000.0);
        f->tables = precompute_tables(f->grid, model);
        f->ad = assemble_ad(f->grid, model);
        f->v.resize(f->grid.size());
        for (std::size_t l = 0; l < f->v.size(); ++l) f->v[l] = 1.0 + std::sin(0.001 * l);
        f->out.resize(f->grid.size());
        slot = std::move(f);
    }
    return *slot;
}

void BM_JumpApplySerial(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    std::vector<double> J(f.grid.size());
    for (auto _ : state) {
        serial::apply(f.tables, f.grid, f.v, J);
        benchmark::DoNotOptimize(J.data());
    }
    state.SetItemsProcessed(state.iterations() * f.grid.size());
}

void BM_JumpApplyOpenMP(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    std::vector<double> J(f.grid.size());
    for (auto _ : state) {
        apply(f.tables, f.grid, f.v, J);
        benchmark::DoNotOptimize(J.data());
    }
    state.SetItemsProcessed(state.iterations() * f.grid.size());
}

void BM_SpmvSerial(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    std::vector<double> y(f.grid.size());
    for (auto _ : state) {
        serial::spmv(f.ad, f.v, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * f.grid.size());
}

void BM_SpmvOpenMP(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    std::vector<double> y(f.grid.size());
    for (auto _ : state) {
        spmv(f.ad, f.v, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * f.grid.size());
}

void BM_Ilu0Factor(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    const SparseMatrix A = shifted_identity(f.ad, -0.01);
    for (auto _ : state) {
        Ilu0Factors ilu(A);
        benchmark::DoNotOptimize(&ilu);
    }
}

void BM_Bicgstab(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    const SparseMatrix A = shifted_identity(f.ad, -0.01);
    const Ilu0Factors ilu(A);
    std::vector<double> x(f.grid.size());
    for (auto _ : state) {
        std::fill(x.begin(), x.end(), 0.0);
        const auto rep = bicgstab(A, f.v, x, &ilu);
        state.counters["iterations"] = static_cast<double>(rep.iterations);
    }
}

}  // namespace

BENCHMARK(BM_JumpApplySerial)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_JumpApplyOpenMP)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpmvSerial)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpmvOpenMP)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Ilu0Factor)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Bicgstab)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
