#include <doctest.h>

#include <cstring>

#include "eckn/data.hpp"
#include "eckn/parallel.hpp"
#include "eckn/reference.hpp"
#include "eckn/rng.hpp"

using namespace eckn;

namespace {

FeatureMap random_map(GroupPtr g, int channels, std::uint64_t seed) {
    FeatureMap x = make_feature_map(g, channels);
    Rng rng(seed);
    for (double& v : x.values) v = rng.uniform(-1, 1);
    return x;
}

bool bitwise(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct ThreadCap {
    explicit ThreadCap(int n) { set_max_threads(n); }
    ~ThreadCap() { set_max_threads(0); }
};

} // namespace

TEST_CASE("parallel kernels match the serial reference bitwise at any thread count") {
    GroupPtr se2 = build_group(GroupKind::SE2, {12, 12, 4});
    GroupPtr s2 = build_group(GroupKind::S2, {8, 16});
    const FeatureMap x = random_map(se2, 2, 3);
    const FeatureMap xs = random_map(s2, 2, 5);

    const PatchShape patch = build_patch_shape(*se2, 2.0, 1.0);
    const PatchShape patch_s2 = build_patch_shape(*s2, 2.0, 1.0);
    const PoolFilter filter = make_gaussian_filter(*se2, 1.5);
    const PoolFilter filter_s2 = make_gaussian_filter(*s2, 2.0);
    const DeformationField tau = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.3, 7);
    const DeformationField tau_s2 = generate_tau(GroupKind::S2, 8, 16, 2.0, 0.3, 9);

    MatrixRM anchor_rows(32, patch.size() * 2);
    {
        const PatchField pf = ref::extract_patches(x, patch);
        Rng rng(11);
        for (int i = 0; i < 32; ++i) {
            const std::size_t e = rng.uniform_index(se2->size());
            for (int j = 0; j < anchor_rows.cols(); ++j)
                anchor_rows(i, j) = pf.values[e * pf.dim + j];
        }
    }
    const NystromEmbedding emb =
        fit_nystrom(anchor_rows, 4, KernelSpec::exponential(), 1e-6, 13);

    const PatchField pf_ser = ref::extract_patches(x, patch);
    const FeatureMap km_ser = ref::kernel_map(pf_ser, emb);
    const FeatureMap pool_ser = ref::pool(x, filter);
    const FeatureMap def_ser = ref::apply_deformation(x, tau, 0.7);
    const PatchField pfs_ser = ref::extract_patches(xs, patch_s2);
    const FeatureMap pools_ser = ref::pool(xs, filter_s2);
    const FeatureMap defs_ser = ref::apply_deformation(xs, tau_s2, 0.7);

    for (int threads : {1, 2, 8}) {
        ThreadCap cap(threads);
        CHECK(bitwise(extract_patches(x, patch).values, pf_ser.values));
        CHECK(bitwise(kernel_map(extract_patches(x, patch), emb).values, km_ser.values));
        CHECK(bitwise(pool(x, filter).values, pool_ser.values));
        CHECK(bitwise(apply_deformation(x, tau, 0.7).values, def_ser.values));
        CHECK(bitwise(extract_patches(xs, patch_s2).values, pfs_ser.values));
        CHECK(bitwise(pool(xs, filter_s2).values, pools_ser.values));
        CHECK(bitwise(apply_deformation(xs, tau_s2, 0.7).values, defs_ser.values));
    }
}

TEST_CASE("thread cap does not change a full forward pass") {
    GroupPtr g = build_group(GroupKind::SE2, {12, 12, 4});
    const Dataset ds = make_synthetic(2, 12, 17);
    std::vector<FeatureMap> inputs;
    for (int i = 0; i < 6; ++i) inputs.push_back(lift(ds.images[i], g));

    NetworkSpec spec;
    spec.sigma0 = 1.0;
    spec.n_fit_patches = 300;
    for (int k = 0; k < 2; ++k) {
        LayerSpec ls;
        ls.kernel = KernelSpec::exponential();
        ls.p = 4;
        ls.kappa = 2.0;
        ls.sigma = k == 0 ? 1.0 : 2.0;
        ls.seed = 19 + k;
        spec.layers.push_back(ls);
    }

    std::vector<double> out1, out8;
    {
        ThreadCap cap(1);
        Network net = fit_network(spec, g, inputs);
        out1 = forward(net, inputs[0]).values;
    }
    {
        ThreadCap cap(8);
        Network net = fit_network(spec, g, inputs);
        out8 = forward(net, inputs[0]).values;
    }
    CHECK(bitwise(out1, out8));
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}
