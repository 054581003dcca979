#include <doctest.h>

#include <cmath>
#include <numbers>

#include "eckn/rng.hpp"
#include "eckn/stability.hpp"

using namespace eckn;

namespace {

Network desk_network(GroupPtr g, const std::vector<FeatureMap>& fit_inputs, std::uint64_t seed) {
    NetworkSpec spec;
    spec.sigma0 = 1.0;
    spec.n_fit_patches = 400;
    for (int k = 0; k < 2; ++k) {
        LayerSpec ls;
        ls.kernel = KernelSpec::exponential();
        ls.p = 4;
        ls.kappa = 2.0;
        ls.sigma = k == 0 ? 1.0 : 2.0;
        ls.seed = derive_seed(seed, k);
        spec.layers.push_back(ls);
    }
    return fit_network(spec, g, fit_inputs);
}

std::vector<FeatureMap> lifted_synthetic(GroupPtr g, int n, std::uint64_t seed) {
    const Dataset ds = make_synthetic(std::max(1, n / 10 + 1), g->width, seed);
    std::vector<FeatureMap> out;
    for (int i = 0; i < n; ++i) out.push_back(lift(ds.images[i], g));
    return out;
}

} // namespace

TEST_CASE("mean_relative_distance: degenerate pool and scaling arithmetic") {
    GroupPtr g = build_group(GroupKind::SE2, {8, 8, 2});
    const auto inputs = lifted_synthetic(g, 4, 3);
    Network net = desk_network(g, inputs, 5);

    // pool = {ref} -> 0
    CHECK(mean_relative_distance(net, inputs[0], {inputs[0]}) == 0.0);

    // hand mean of two members
    const double d1 = mean_relative_distance(net, inputs[0], {inputs[1]});
    const double d2 = mean_relative_distance(net, inputs[0], {inputs[2]});
    const double both = mean_relative_distance(net, inputs[0], {inputs[1], inputs[2]});
    CHECK(both == doctest::Approx(0.5 * (d1 + d2)).epsilon(1e-12));

    const FeatureMap zeros = lift(make_image(8, 8, 1, 0.0), g);
    CHECK_THROWS_AS(mean_relative_distance(net, zeros, {inputs[0]}), NumericError);
}

TEST_CASE("telescoping bound: alpha = 0 collapses to zero") {
    GroupPtr g = build_group(GroupKind::SE2, {8, 8, 2});
    const auto inputs = lifted_synthetic(g, 3, 7);
    Network net = desk_network(g, inputs, 9);
    const DeformationField tau = generate_tau(GroupKind::SE2, 8, 8, 2.0, 0.3, 11);
    const BoundCheck bc = verify_stability_telescoping(net, inputs[0], tau, 0.0);
    CHECK(bc.lhs == 0.0);
    CHECK(bc.rhs == 0.0);
    CHECK(bc.pass);
}

TEST_CASE("telescoping bound holds on seeded desk triples") {
    GroupPtr g = build_group(GroupKind::SE2, {16, 16, 4});
    const auto inputs = lifted_synthetic(g, 6, 13);
    Network net = desk_network(g, inputs, 15);
    const double alphas[3] = {0.1, 0.5, 1.0};
    for (int t = 0; t < 6; ++t) {
        const DeformationField tau =
            generate_tau(GroupKind::SE2, 16, 16, 2.0, 0.3, derive_seed(17, t));
        const BoundCheck bc =
            verify_stability_telescoping(net, inputs[t % inputs.size()], tau, alphas[t % 3]);
        CHECK(bc.pass);
        CHECK(bc.lhs <= bc.rhs + 1e-8);
        CHECK(bc.admissible);
        // per-term breakdown recorded
        CHECK(bc.terms.size() >= 4);
        for (const auto& [name, value] : bc.terms) CHECK(value >= 0.0);
    }
}

TEST_CASE("single-layer contraction: gap bounded by the input gap") {
    // N=1, identity patch, collapsed pooling: |Phi(L x) - Phi(x)| <= |L x - x|
    GroupPtr g = build_group(GroupKind::SE2, {12, 12, 1});
    const auto inputs = lifted_synthetic(g, 2, 19);
    NetworkSpec spec;
    spec.sigma0 = 0.0;
    LayerSpec ls;
    ls.kernel = KernelSpec::exponential();
    ls.p = 1; // single-pixel patches normalize to one direction
    ls.kappa = 0.5; // identity patch
    ls.sigma = 0.1; // identity pooling
    ls.seed = 21;
    spec.layers = {ls};
    spec.n_fit_patches = 200;
    Network net = fit_network(spec, g, inputs);

    const DeformationField tau = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.3, 23);
    for (double a : {0.3, 1.0}) {
        const FeatureMap moved = apply_deformation(inputs[0], tau, a);
        CHECK(fm_distance(forward(net, moved), forward(net, inputs[0])) <=
              fm_distance(moved, inputs[0]) + 1e-10);
    }
}

TEST_CASE("global invariance chain: pooled gap below representation gap") {
    GroupPtr g = build_group(GroupKind::SE2, {12, 12, 4});
    const auto inputs = lifted_synthetic(g, 4, 29);
    Network net = desk_network(g, inputs, 31);
    const DeformationField tau = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.3, 37);

    SUBCASE("tau = 0 with a lattice-exact g: pooled gap vanishes") {
        const BoundCheck bc = verify_global_invariance(
            net, inputs[0], GroupElement::se2(2, 1, 0), tau, 0.0);
        CHECK(bc.lhs <= 1e-9);
        CHECK(bc.pass);
    }
    SUBCASE("g = identity reduces to the stability gap") {
        const BoundCheck bc = verify_global_invariance(
            net, inputs[0], GroupElement::identity(GroupKind::SE2), tau, 0.5);
        const FeatureMap moved = apply_deformation(inputs[0], tau, 0.5);
        CHECK(bc.rhs ==
              doctest::Approx(fm_distance(forward(net, moved), forward(net, inputs[0])))
                  .epsilon(1e-12));
        CHECK(bc.pass);
    }
    SUBCASE("random triples satisfy the inequality") {
        for (int t = 0; t < 4; ++t) {
            const BoundCheck bc = verify_global_invariance(
                net, inputs[t], GroupElement::se2(t, 3 - t, 0), tau, 0.1 + 0.3 * t);
            CHECK(bc.pass);
        }
    }
}

TEST_CASE("rademacher_bound: fixtures to 1e-12") {
    CHECK(std::abs(rademacher_bound({1.0}, 1.0) - 1.0) <= 1e-12);
    CHECK(std::abs(rademacher_bound({1.0, 1.0, 1.0, 1.0}, 2.0) - 1.0) <= 1e-12);
    // unit-norm inputs: bound = lambda / sqrt(M)
    CHECK(std::abs(rademacher_bound(std::vector<double>(9, 1.0), 3.0) - 1.0) <= 1e-12);
    CHECK_THROWS_AS(rademacher_bound({}, 1.0), ShapeError);
    CHECK_THROWS_AS(rademacher_bound({1.0, -0.1}, 1.0), ShapeError);
    CHECK_THROWS_AS(rademacher_bound({1.0}, 0.0), ShapeError);
}

TEST_CASE("lipschitz_prediction_gap: products and the Cauchy-Schwarz check") {
    CHECK(lipschitz_prediction_gap(0.0, 5.0) == 0.0);
    CHECK(lipschitz_prediction_gap(2.0, 0.3) == doctest::Approx(0.6));
    CHECK_THROWS_AS(lipschitz_prediction_gap(-1.0, 1.0), ShapeError);

    // |<w, dPhi>| <= |w| |dPhi| on 100 samples
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> w(16), d(16);
        double nw = 0.0, nd = 0.0, dot = 0.0;
        for (int j = 0; j < 16; ++j) {
            w[j] = rng.normal();
            d[j] = rng.normal();
            nw += w[j] * w[j];
            nd += d[j] * d[j];
            dot += w[j] * d[j];
        }
        CHECK(std::abs(dot) <= lipschitz_prediction_gap(std::sqrt(nw), std::sqrt(nd)) + 1e-10);
    }
}

TEST_CASE("homogeneous_activation_eval: zero extension, homogeneity, exp fixture") {
    const std::vector<double> g{1.0, 0.0};
    CHECK(homogeneous_activation_eval(g, {0.0, 0.0}, Activation::Exp) == 0.0);
    // g=(1,0), x=(3,0): |x| * exp(<g,x>/|x| - 1) = 3 * exp(0) = 3
    CHECK(homogeneous_activation_eval(g, {3.0, 0.0}, Activation::Exp) ==
          doctest::Approx(3.0).epsilon(1e-12));
    Rng rng(43);
    for (Activation act : {Activation::SmoothedRelu, Activation::Exp}) {
        for (int i = 0; i < 50; ++i) {
            std::vector<double> gg(4), x(4);
            for (int j = 0; j < 4; ++j) {
                gg[j] = rng.normal();
                x[j] = rng.normal();
            }
            const double f1 = homogeneous_activation_eval(gg, x, act);
            std::vector<double> x2 = x;
            for (double& v : x2) v *= 2.0;
            CHECK(homogeneous_activation_eval(gg, x2, act) ==
                  doctest::Approx(2.0 * f1).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(homogeneous_activation_eval({1.0}, {1.0, 2.0}, Activation::Exp), ShapeError);
}

TEST_CASE("mini sweep: axes present, distances finite, determinism, report round-trip") {
    const std::string text = R"(
[run]
seed = 51
[group]
kind = se2
height = 8
width = 8
n_theta = 4
[dataset]
source = synthetic
n_per_class = 4
image_size = 8
rotate = true
[network]
n_layers = 2
sigma0 = 1
[layer1]
p = 4
[layer2]
p = 4
[sweep]
alphas = 0.5,1
kappas = 2
sigmas = 1,3
rbf_bandwidths = 5
alpha_kernels = exponential
n_bound_triples = 2
)";
    const RunConfig cfg = parse_config_string(text);
    const Dataset ds = build_dataset(cfg);
    const StabilityReport rep = run_stability_sweep(cfg, ds, cfg.seed);

    // axes present: alpha panel cells carry both alphas, sigma panel both sigmas
    bool a05 = false, a1 = false, s1 = false, s3 = false, baseline_seen = false;
    for (const SweepCell& c : rep.cells) {
        CHECK(std::isfinite(c.same_class_mrd));
        CHECK(std::isfinite(c.mixed_mrd));
        CHECK(c.same_class_mrd >= 0.0);
        if (c.panel == "alpha" && c.alpha == 0.5) a05 = true;
        if (c.panel == "alpha" && c.alpha == 1.0) a1 = true;
        if (c.panel == "sigma" && c.sigma == 1.0) s1 = true;
        if (c.panel == "sigma" && c.sigma == 3.0) s3 = true;
        if (c.model == "baseline") baseline_seen = true;
    }
    CHECK(a05);
    CHECK(a1);
    CHECK(s1);
    CHECK(s3);
    CHECK(baseline_seen);

    // all bound checks pass
    CHECK(!rep.bounds.empty());
    for (const BoundCheck& bc : rep.bounds) CHECK(bc.pass);

    // determinism: identical rerun, byte-identical distances.csv
    const StabilityReport rep2 = run_stability_sweep(cfg, ds, cfg.seed);
    CHECK(distances_csv(rep) == distances_csv(rep2));

    // report json round-trip preserves the csv bytes
    const StabilityReport back = report_from_json(report_to_json(rep));
    CHECK(distances_csv(back) == distances_csv(rep));
}

TEST_CASE("sweep: alpha = 0 cell gives zero distance") {
    const std::string text = R"(
[run]
seed = 53
[group]
kind = se2
height = 8
width = 8
n_theta = 2
[dataset]
source = synthetic
n_per_class = 4
image_size = 8
rotate = false
[network]
n_layers = 1
sigma0 = 1
[layer1]
p = 4
sigma = 1.5
[sweep]
alphas = 0,1
kappas = 2
sigmas = 2
rbf_bandwidths = 5
alpha_kernels = exponential
rotation_augment = false
n_bound_triples = 1
)";
    const RunConfig cfg = parse_config_string(text);
    const Dataset ds = build_dataset(cfg);
    const StabilityReport rep = run_stability_sweep(cfg, ds, cfg.seed);
    bool found = false;
    for (const SweepCell& c : rep.cells) {
        if (c.panel == "alpha" && c.alpha == 0.0) {
            found = true;
            // the ref's own alpha=0 copy is bitwise the reference: own-curve 0
            CHECK(c.same_class_mrd >= 0.0);
        }
    }
    CHECK(found);
    for (const JobRecord& j : rep.jobs) {
        if (j.panel != "alpha") continue;
        for (const auto& own : j.per_ref_own) CHECK(own[0] == 0.0); // alpha = 0 slot
    }
}

TEST_CASE("sweep rejects insufficient datasets") {
    const RunConfig cfg = parse_config_string(
        "[group]\nkind = se2\nheight = 8\nwidth = 8\nn_theta = 2\n[dataset]\nimage_size = 8\n");
    const Dataset tiny = make_synthetic(2, 8, 3); // 2 per class < 4
    CHECK_THROWS_AS(run_stability_sweep(cfg, tiny, 1), ConfigError);
}
