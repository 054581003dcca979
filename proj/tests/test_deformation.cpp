#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "eckn/deformation.hpp"
#include "eckn/network.hpp"
#include "eckn/rng.hpp"

using namespace eckn;

namespace {

constexpr double kPi = std::numbers::pi;

FeatureMap random_map(GroupPtr g, int channels, std::uint64_t seed) {
    FeatureMap x = make_feature_map(g, channels);
    Rng rng(seed);
    for (double& v : x.values) v = rng.uniform(-1, 1);
    return x;
}

} // namespace

TEST_CASE("generate_tau: rescaling contract and stored norms") {
    const DeformationField tau = generate_tau(GroupKind::SE2, 16, 16, 2.0, 0.3, 7);
    CHECK(std::abs(tau.grad_sup - 0.3) <= 1e-10);
    CHECK(std::abs(tau.grad_sup - grad_sup_norm(tau)) <= 1e-12);
    CHECK(std::abs(tau.sup - sup_norm(tau)) <= 1e-12);
    CHECK(tau.admissible());
}

TEST_CASE("generate_tau: same seed gives a bitwise-identical field") {
    const DeformationField a = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.25, 99);
    const DeformationField b = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.25, 99);
    CHECK(std::memcmp(a.displacement.data(), b.displacement.data(),
                      a.displacement.size() * sizeof(double)) == 0);
    const DeformationField c = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.25, 100);
    CHECK(std::memcmp(a.displacement.data(), c.displacement.data(),
                      a.displacement.size() * sizeof(double)) != 0);
}

TEST_CASE("generate_tau: huge smoothness flattens the field before rescaling") {
    // at smoothness 1e3 the smoothed noise is nearly constant: tiny gradient
    // relative to its sup
    DeformationField tau = generate_tau(GroupKind::SE2, 16, 16, 1000.0, 0.3, 3);
    // undo the rescale to inspect the raw smoothed field
    const double pre_scale = 0.3 / tau.grad_sup; // = 1 after rescale
    CHECK(pre_scale == doctest::Approx(1.0));
    DeformationField raw = scale_tau(tau, tau.sup > 0 ? 1.0 / tau.sup : 1.0);
    CHECK(raw.grad_sup <= 1e-3 * raw.sup + 1e-12);
}

TEST_CASE("generate_tau rejects bad parameters") {
    CHECK_THROWS_AS(generate_tau(GroupKind::SE2, 8, 8, 2.0, 0.0, 1), ShapeError);
    CHECK_THROWS_AS(generate_tau(GroupKind::SE2, 8, 8, 2.0, 0.7, 1), ShapeError);
    CHECK_THROWS_AS(generate_tau(GroupKind::SE2, 8, 8, -1.0, 0.3, 1), ShapeError);
    CHECK_THROWS_AS(generate_tau(GroupKind::SE2, 0, 8, 2.0, 0.3, 1), ShapeError);
}

TEST_CASE("norms: zero and constant fields") {
    DeformationField tau;
    tau.kind = GroupKind::SE2;
    tau.height = 8;
    tau.width = 8;
    tau.displacement.assign(8 * 8 * 2, 0.0);
    CHECK(grad_sup_norm(tau) == 0.0);
    CHECK(sup_norm(tau) == 0.0);

    for (int i = 0; i < 64; ++i) {
        tau.displacement[2 * i] = 3.0;
        tau.displacement[2 * i + 1] = 4.0;
    }
    CHECK(sup_norm(tau) == doctest::Approx(5.0));
    CHECK(grad_sup_norm(tau) == 0.0);
}

TEST_CASE("grad_sup matches the discrete derivative of a periodic sinusoid") {
    // tau_x(x) = A sin(2 pi x / w): periodic, analytic gradient A*(2pi/w)*cos;
    // central differences give exactly A*sin(h)/h * cos at the grid, h = 2pi/w
    const int w = 32, h = 8;
    DeformationField tau;
    tau.kind = GroupKind::SE2;
    tau.height = h;
    tau.width = w;
    tau.displacement.assign(static_cast<std::size_t>(h) * w * 2, 0.0);
    const double amp = 0.1 * w / (2 * kPi);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            tau.displacement[(static_cast<std::size_t>(r) * w + c) * 2] =
                amp * std::sin(2 * kPi * c / w);
    const double step = 2 * kPi / w;
    const double expect = amp * std::sin(step) / step * (2 * kPi / w);
    CHECK(grad_sup_norm(tau) == doctest::Approx(expect).epsilon(1e-12));
    // and the hand value is within discretization error of the analytic 0.1
    CHECK(std::abs(expect - 0.1) <= 0.01);
}

TEST_CASE("grad_sup scales exactly linearly in alpha") {
    const DeformationField tau = generate_tau(GroupKind::SE2, 12, 12, 1.5, 0.4, 11);
    for (double a : {0.1, 0.5, 1.0}) {
        const DeformationField scaled = scale_tau(tau, a);
        CHECK(scaled.grad_sup == doctest::Approx(a * tau.grad_sup).epsilon(1e-12));
        CHECK(scaled.sup == doctest::Approx(a * tau.sup).epsilon(1e-12));
    }
}

TEST_CASE("apply_deformation: alpha = 0 is a bitwise copy; constants stay constant") {
    GroupPtr g = build_group(GroupKind::SE2, {12, 12, 4});
    const FeatureMap x = random_map(g, 2, 13);
    const DeformationField tau = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.3, 17);
    const FeatureMap y = apply_deformation(x, tau, 0.0);
    CHECK(std::memcmp(x.values.data(), y.values.data(), x.values.size() * sizeof(double)) == 0);

    const FeatureMap c = make_feature_map(g, 1, 0.55);
    for (double v : apply_deformation(c, tau, 1.0).values)
        CHECK(v == doctest::Approx(0.55).epsilon(1e-15));
}

TEST_CASE("apply_deformation: constant lattice field equals group_translate") {
    GroupPtr g = build_group(GroupKind::SE2, {10, 10, 2});
    const FeatureMap x = random_map(g, 1, 19);
    DeformationField tau;
    tau.kind = GroupKind::SE2;
    tau.height = 10;
    tau.width = 10;
    tau.displacement.assign(200, 0.0);
    for (int i = 0; i < 100; ++i) {
        tau.displacement[2 * i] = 2.0;     // x displacement
        tau.displacement[2 * i + 1] = 1.0; // y displacement
    }
    tau.grad_sup = grad_sup_norm(tau);
    tau.sup = sup_norm(tau);
    // (L_tau x)(u) = x(u - c) = (L_g x)(u) for the translation g = c
    const FeatureMap a = apply_deformation(x, tau, 1.0);
    const FeatureMap b = group_translate(x, GroupElement::se2(2.0, 1.0, 0.0));
    CHECK(fm_distance(a, b) <= 1e-14);
}

TEST_CASE("apply_deformation strictness flag") {
    GroupPtr g = build_group(GroupKind::SE2, {8, 8, 1});
    const FeatureMap x = random_map(g, 1, 23);
    const DeformationField tau = generate_tau(GroupKind::SE2, 8, 8, 2.0, 0.4, 29);
    CHECK_NOTHROW(apply_deformation(x, tau, 1.0, true));  // 0.4 <= 0.5
    CHECK_THROWS_AS(apply_deformation(x, tau, 2.0, true), ShapeError);
    CHECK_NOTHROW(apply_deformation(x, tau, 2.0, false)); // warn-only mode
}

TEST_CASE("deform_image round-trips through the feature-map path") {
    BaseImage img = make_image(12, 12);
    Rng rng(31);
    for (double& p : img.pixels) p = rng.uniform();
    const DeformationField tau = generate_tau(GroupKind::SE2, 12, 12, 2.0, 0.3, 37);
    const BaseImage out = deform_image(img, tau, 0.7);
    CHECK(out.height == 12);
    // pixel range preserved by convex interpolation
    for (double p : out.pixels) {
        CHECK(p >= -1e-12);
        CHECK(p <= 1.0 + 1e-12);
    }
    const BaseImage same = deform_image(img, tau, 0.0);
    CHECK(std::memcmp(same.pixels.data(), img.pixels.data(),
                      img.pixels.size() * sizeof(double)) == 0);
}

TEST_CASE("probe_commutator_norm: self-commutator vanishes, shift commutes with pooling") {
    GroupPtr g = build_group(GroupKind::SE2, {12, 12, 2});
    const PoolFilter f = make_gaussian_filter(*g, 1.5);
    const FmOperator pool_op = [&f](const FeatureMap& x) { return pool(x, f); };
    const FmOperator shift_op = [](const FeatureMap& x) {
        return group_translate(x, GroupElement::se2(2, 1, 0));
    };
    CHECK(probe_commutator_norm(pool_op, pool_op, g, 1, 5, 41) == 0.0);
    CHECK(probe_commutator_norm(shift_op, pool_op, g, 1, 5, 43) <= 1e-10);
}

TEST_CASE("commutator probe grows with alpha; pooling displacement decays with sigma") {
    GroupPtr g = build_group(GroupKind::SE2, {16, 16, 2});
    const DeformationField tau = generate_tau(GroupKind::SE2, 16, 16, 2.0, 0.3, 47);
    const PoolFilter f1 = make_gaussian_filter(*g, 1.0);
    const PatchShape patch = build_patch_shape(*g, 2.0, 1.0);

    // [P2 A1, L_at] probe, non-decreasing in alpha
    double prev = -1.0;
    for (double a : {0.1, 0.5, 1.0}) {
        const FmOperator deform_op = [&tau, a](const FeatureMap& x) {
            return apply_deformation(x, tau, a);
        };
        const FmOperator patch_pool_op = [&](const FeatureMap& x) {
            const PatchField pf = extract_patches(pool(x, f1), patch);
            FeatureMap as_map = make_feature_map(x.group, pf.dim);
            as_map.values = pf.values;
            return as_map;
        };
        const double val = probe_commutator_norm(deform_op, patch_pool_op, g, 1, 4, 53);
        CHECK(val >= prev - 1e-12);
        prev = val;
    }
    CHECK(prev > 0.0);

    // |L_tau A_N - A_N| probe, non-increasing in sigma_N
    double prev_decay = std::numeric_limits<double>::infinity();
    for (double sigma : {1.0, 3.0, 5.0, 10.0}) {
        const PoolFilter fN = make_gaussian_filter(*g, sigma);
        const FmOperator a_op = [&fN](const FeatureMap& x) { return pool(x, fN); };
        const FmOperator ta_op = [&fN, &tau](const FeatureMap& x) {
            return apply_deformation(pool(x, fN), tau, 1.0);
        };
        const double val = probe_difference_norm(ta_op, a_op, g, 1, 4, 59);
        CHECK(val <= prev_decay + 1e-12);
        prev_decay = val;
    }
}

TEST_CASE("deformation operator norm ceiling on probe signals") {
    GroupPtr g = build_group(GroupKind::SE2, {16, 16, 1});
    const DeformationField tau = generate_tau(GroupKind::SE2, 16, 16, 2.0, 0.3, 61);
    for (double a : {0.5, 1.0}) {
        double worst = 0.0;
        for (int i = 0; i < 6; ++i) {
            const FeatureMap x = band_limited_probe(g, 1, derive_seed(67, i));
            worst = std::max(worst, fm_norm(apply_deformation(x, tau, a)) / fm_norm(x));
        }
        CHECK(worst <= 1.0 + 4.0 * tau.grad_sup * a);
    }
}

TEST_CASE("s2 deformation: chart metric and pole exclusion") {
    const DeformationField tau = generate_tau(GroupKind::S2, 12, 24, 2.0, 0.3, 71);
    CHECK(std::abs(tau.grad_sup - 0.3) <= 1e-10);
    GroupPtr s2 = build_group(GroupKind::S2, {12, 24});
    const FeatureMap x = random_map(s2, 1, 73);
    const FeatureMap y = apply_deformation(x, tau, 0.5);
    CHECK(y.size() == x.size());
    double vmax = 0.0;
    for (double v : x.values) vmax = std::max(vmax, std::abs(v));
    for (double v : y.values) CHECK(std::abs(v) <= vmax + 1e-12);
}
