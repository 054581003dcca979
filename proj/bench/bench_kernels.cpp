// Wall-time comparison of the OpenMP production kernels against the serial
// reference implementations, at two desk-scale grids.
#include <benchmark/benchmark.h>

#include "eckn/reference.hpp"
#include "eckn/rng.hpp"

namespace {

using namespace eckn;

struct Fixture {
    GroupPtr group;
    FeatureMap map;
    PatchShape patch;
    PoolFilter filter;
    NystromEmbedding embedding;
    DeformationField tau;
};

Fixture make_fixture(int res, int n_theta) {
    Fixture f;
    f.group = build_group(GroupKind::SE2, {res, res, n_theta});
    f.map = make_feature_map(f.group, 4);
    Rng rng(7);
    for (double& v : f.map.values) v = rng.uniform(-1, 1);
    f.patch = build_patch_shape(*f.group, 2.0, 1.0);
    f.filter = make_gaussian_filter(*f.group, 2.0);
    f.tau = generate_tau(GroupKind::SE2, res, res, 2.0, 0.3, 11);

    const PatchField pf = ref::extract_patches(f.map, f.patch);
    MatrixRM rows(64, pf.dim);
    for (int i = 0; i < 64; ++i) {
        const std::size_t e = rng.uniform_index(f.group->size());
        for (int j = 0; j < pf.dim; ++j) rows(i, j) = pf.values[e * pf.dim + j];
    }
    f.embedding = fit_nystrom(rows, 8, KernelSpec::exponential(), 1e-6, 13);
    return f;
}

Fixture& fixture(int res) {
    static Fixture f16 = make_fixture(16, 8);
    static Fixture f32 = make_fixture(32, 8);
    return res == 16 ? f16 : f32;
}

void bm_extract_omp(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(extract_patches(f.map, f.patch));
}

void bm_extract_serial(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ref::extract_patches(f.map, f.patch));
}

void bm_kernel_map_omp(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    const PatchField pf = extract_patches(f.map, f.patch);
    for (auto _ : state) benchmark::DoNotOptimize(kernel_map(pf, f.embedding));
}

void bm_kernel_map_serial(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    const PatchField pf = extract_patches(f.map, f.patch);
    for (auto _ : state) benchmark::DoNotOptimize(ref::kernel_map(pf, f.embedding));
}

void bm_pool_omp(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(pool(f.map, f.filter));
}

void bm_pool_serial(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ref::pool(f.map, f.filter));
}

void bm_deform_omp(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(apply_deformation(f.map, f.tau, 0.7));
}

void bm_deform_serial(benchmark::State& state) {
    Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ref::apply_deformation(f.map, f.tau, 0.7));
}

BENCHMARK(bm_extract_serial)->Arg(16)->Arg(32);
BENCHMARK(bm_extract_omp)->Arg(16)->Arg(32);
BENCHMARK(bm_kernel_map_serial)->Arg(16)->Arg(32);
BENCHMARK(bm_kernel_map_omp)->Arg(16)->Arg(32);
BENCHMARK(bm_pool_serial)->Arg(16)->Arg(32);
BENCHMARK(bm_pool_omp)->Arg(16)->Arg(32);
BENCHMARK(bm_deform_serial)->Arg(16)->Arg(32);
BENCHMARK(bm_deform_omp)->Arg(16)->Arg(32);

} // namespace

BENCHMARK_MAIN();
