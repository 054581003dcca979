#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "eckn/rng.hpp"
#include "eckn/signal.hpp"

using namespace eckn;

namespace {

constexpr double kPi = std::numbers::pi;

BaseImage random_image(int h, int w, std::uint64_t seed) {
    BaseImage img = make_image(h, w);
    Rng rng(seed);
    for (double& p : img.pixels) p = rng.uniform();
    return img;
}

FeatureMap random_map(GroupPtr g, int channels, std::uint64_t seed) {
    FeatureMap x = make_feature_map(g, channels);
    Rng rng(seed);
    for (double& v : x.values) v = rng.uniform(-1, 1);
    return x;
}

bool bitwise_equal(const FeatureMap& a, const FeatureMap& b) {
    return a.values.size() == b.values.size() &&
           std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("lift: constant image stays constant on the whole group") {
    GroupPtr g = build_group(GroupKind::SE2, {4, 4, 4});
    const FeatureMap x = lift(make_image(4, 4, 1, 0.7), g);
    for (double v : x.values) CHECK(v == 0.7);
}

TEST_CASE("lift: fiber constancy repeats each pixel n_theta times") {
    GroupPtr g = build_group(GroupKind::SE2, {2, 2, 4});
    const BaseImage img = random_image(2, 2, 3);
    const FeatureMap x = lift(img, g);
    CHECK(x.size() == 16);
    for (int y = 0; y < 2; ++y)
        for (int xx = 0; xx < 2; ++xx)
            for (int t = 0; t < 4; ++t)
                CHECK(x.values[g->se2_index(xx, y, t)] == img.at(y, xx));
}

TEST_CASE("lift norm equals the image root mean square") {
    GroupPtr g = build_group(GroupKind::SE2, {2, 2, 4});
    BaseImage img = make_image(2, 2);
    img.at(0, 0) = 0.1;
    img.at(0, 1) = 0.5;
    img.at(1, 0) = 0.9;
    img.at(1, 1) = 0.3;
    // oracle: hand-computed Haar-weighted sum; each pixel appears 4 times at
    // weight 1/16
    const double expect = std::sqrt((0.1 * 0.1 + 0.5 * 0.5 + 0.9 * 0.9 + 0.3 * 0.3) / 4.0);
    CHECK(fm_norm(lift(img, g)) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("lift rejects mismatched dims") {
    GroupPtr g = build_group(GroupKind::SE2, {4, 4, 2});
    CHECK_THROWS_AS(lift(make_image(3, 4), g), ShapeError);
}

TEST_CASE("group_translate: identity is a bitwise copy") {
    GroupPtr g = build_group(GroupKind::SE2, {8, 8, 4});
    const FeatureMap x = random_map(g, 3, 11);
    CHECK(bitwise_equal(group_translate(x, GroupElement::identity(GroupKind::SE2)), x));
}

TEST_CASE("group_translate: lattice translation is an exact circular shift") {
    GroupPtr g = build_group(GroupKind::SE2, {4, 4, 2});
    const FeatureMap x = random_map(g, 2, 13);
    const FeatureMap y = group_translate(x, GroupElement::se2(1, 0, 0));
    for (int yy = 0; yy < 4; ++yy)
        for (int xx = 0; xx < 4; ++xx)
            for (int t = 0; t < 2; ++t)
                for (int c = 0; c < 2; ++c)
                    CHECK(y.values[g->se2_index(xx, yy, t) * 2 + c] ==
                          x.values[g->se2_index(xx - 1, yy, t) * 2 + c]);
}

TEST_CASE("group_translate: quarter turn is an exact permutation") {
    GroupPtr g = build_group(GroupKind::SE2, {4, 4, 4});
    const FeatureMap x = random_map(g, 1, 17);
    const GroupElement rot = GroupElement::se2(0, 0, kPi / 2);
    const FeatureMap y = group_translate(x, rot);
    // oracle permutation: g^-1 sends (x, y, t) to (y, -x, t-1) for the quarter
    // turn about the origin with wraparound
    for (int yy = 0; yy < 4; ++yy)
        for (int xx = 0; xx < 4; ++xx)
            for (int t = 0; t < 4; ++t) {
                const double expect = x.values[g->se2_index(yy, -xx, t - 1)];
                CHECK(y.values[g->se2_index(xx, yy, t)] == expect);
            }
}

TEST_CASE("group_translate composes: L_g L_h = L_gh on the lattice") {
    GroupPtr g = build_group(GroupKind::SE2, {6, 6, 4});
    const FeatureMap x = random_map(g, 2, 19);
    const GroupElement a = GroupElement::se2(2, 1, 0);
    const GroupElement b = GroupElement::se2(0, 0, kPi / 2);
    const FeatureMap lhs = group_translate(group_translate(x, b), a);
    const FeatureMap rhs = group_translate(x, compose(a, b));
    CHECK(fm_distance(lhs, rhs) <= 1e-12);
}

TEST_CASE("group_translate preserves the norm exactly for lattice-exact g") {
    GroupPtr g = build_group(GroupKind::SE2, {8, 8, 4});
    const FeatureMap x = random_map(g, 2, 23);
    const double n0 = fm_norm(x);
    CHECK(fm_norm(group_translate(x, GroupElement::se2(3, 2, 0))) ==
          doctest::Approx(n0).epsilon(1e-14));
    CHECK(fm_norm(group_translate(x, GroupElement::se2(1, 0, kPi))) ==
          doctest::Approx(n0).epsilon(1e-14));
}

TEST_CASE("group_translate: arbitrary g preserves band-limited norms within 2%") {
    GroupPtr g = build_group(GroupKind::SE2, {16, 16, 8});
    BaseImage img = make_image(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            img.at(y, x) = std::exp(-0.5 * ((x - 7.5) * (x - 7.5) + (y - 7.5) * (y - 7.5)) / 9.0);
    const FeatureMap x = lift(img, g);
    const GroupElement arbitrary = GroupElement::se2(0.37, -1.22, 0.51);
    const double n0 = fm_norm(x);
    const double n1 = fm_norm(group_translate(x, arbitrary, FiberInterp::Linear));
    CHECK(std::abs(n1 - n0) / n0 <= 0.02);
}

TEST_CASE("sample_interpolated: exact at lattice points") {
    GroupPtr g = build_group(GroupKind::SE2, {5, 7, 3});
    const FeatureMap x = random_map(g, 2, 29);
    for (int yy = 0; yy < 5; ++yy)
        for (int xx = 0; xx < 7; ++xx) {
            const auto v = sample_interpolated(x, GroupElement::se2(xx, yy, 2 * kPi / 3));
            CHECK(v[0] == x.values[g->se2_index(xx, yy, 1) * 2]);
            CHECK(v[1] == x.values[g->se2_index(xx, yy, 1) * 2 + 1]);
        }
}

TEST_CASE("sample_interpolated: midpoints on a 1D profile") {
    GroupPtr g = build_group(GroupKind::SE2, {1, 4, 1});
    FeatureMap x = make_feature_map(g, 1);
    x.values = {0.0, 1.0, 1.0, 0.25};
    // midpoint of neighbors 0 and 1 -> 0.5
    CHECK(sample_interpolated(x, GroupElement::se2(0.5, 0, 0))[0] == doctest::Approx(0.5));
    // constant along the sampled segment -> that constant
    CHECK(sample_interpolated(x, GroupElement::se2(1.5, 0, 0))[0] == doctest::Approx(1.0));
}

TEST_CASE("sample_interpolated is non-expansive in the sup norm") {
    GroupPtr g = build_group(GroupKind::SE2, {6, 6, 2});
    const FeatureMap x = random_map(g, 1, 31);
    double vmax = 0.0;
    for (double v : x.values) vmax = std::max(vmax, std::abs(v));
    Rng rng(37);
    for (int i = 0; i < 200; ++i) {
        const auto v = sample_interpolated(
            x, GroupElement::se2(rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 2 * kPi)),
            FiberInterp::Linear);
        CHECK(std::abs(v[0]) <= vmax + 1e-12);
    }
}

TEST_CASE("lift then fiber-average recovers the base image exactly") {
    GroupPtr g = build_group(GroupKind::SE2, {6, 6, 4});
    const BaseImage img = random_image(6, 6, 41);
    const FeatureMap avg = fiber_average(lift(img, g));
    CHECK(avg.size() == 36);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            CHECK(avg.values[avg.group->se2_index(x, y, 0)] ==
                  doctest::Approx(img.at(y, x)).epsilon(1e-15));
}

TEST_CASE("stereographic projection conventions") {
    GroupPtr s2 = build_group(GroupKind::S2, {16, 32});

    SUBCASE("constant image covers the projected footprint") {
        const FeatureMap x = stereographic_project(make_image(9, 9, 1, 1.0), s2, 2.0);
        for (std::size_t e = 0; e < s2->size(); ++e) {
            const double beta = s2->elements[e].as_s2().beta;
            const double r = 2.0 * std::tan(beta / 2.0);
            if (r <= 3.9) CHECK(x.values[e] == doctest::Approx(1.0)); // well inside the frame
            if (r > 5.7) CHECK(x.values[e] == 0.0);                   // outside the 9x9 frame
        }
    }

    SUBCASE("north-pole neighborhood maps to the image center") {
        BaseImage img = make_image(9, 9);
        img.at(4, 4) = 1.0;
        const FeatureMap x = stereographic_project(img, s2, 1.0);
        const double beta0 = s2->elements[0].as_s2().beta;
        CHECK(1.0 * std::tan(beta0 / 2.0) < 0.5); // first ring inside the center cell
        CHECK(x.values[0] > 0.5);
    }

    SUBCASE("equator point at scale s lands at plane point (s, 0)") {
        // oracle: beta = pi/2, phi = 0 projects to radius s * tan(pi/4) = s;
        // with s = 2 the sample point is (center + 2, center)
        BaseImage img = make_image(9, 9);
        img.at(4, 6) = 1.0;
        GroupPtr fine = build_group(GroupKind::S2, {64, 4});
        const FeatureMap x = stereographic_project(img, fine, 2.0);
        const int eq_row = 31; // colatitude just below pi/2
        CHECK(x.values[fine->s2_index(eq_row, 0)] > 0.9);
    }

    SUBCASE("requires an s2 grid") {
        GroupPtr se2 = build_group(GroupKind::SE2, {4, 4, 1});
        CHECK_THROWS_AS(stereographic_project(make_image(4, 4), se2, 1.0), ShapeError);
    }
}

TEST_CASE("fm_distance: hand-built cases and error paths") {
    GroupPtr g = build_group(GroupKind::SE2, {1, 2, 1});
    FeatureMap a = make_feature_map(g, 1);
    a.values = {1.0, 0.0};
    FeatureMap b = make_feature_map(g, 1);
    b.values = {0.0, 0.0};
    // weights (0.5, 0.5), values (1,0) vs (0,0) -> sqrt(0.5)
    CHECK(fm_distance(a, b) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(fm_distance(a, a) == 0.0);
    CHECK(fm_distance(a, b) == doctest::Approx(fm_norm(a)).epsilon(1e-14));
    CHECK(fm_distance(a, b) == fm_distance(b, a));

    FeatureMap c = make_feature_map(g, 2);
    CHECK_THROWS_AS(fm_distance(a, c), ShapeError);
    GroupPtr g2 = build_group(GroupKind::SE2, {1, 3, 1});
    FeatureMap d = make_feature_map(g2, 1);
    CHECK_THROWS_AS(fm_distance(a, d), ShapeError);
}

TEST_CASE("cached norm matches recomputation") {
    GroupPtr g = build_group(GroupKind::SE2, {8, 8, 2});
    FeatureMap x = random_map(g, 3, 43);
    x.cached_norm = fm_norm(x);
    CHECK(std::abs(*x.cached_norm - fm_norm(x)) <= 1e-10);
}

TEST_CASE("s2 signals translate under so3; z-rotation by a grid step is exact") {
    GroupPtr s2 = build_group(GroupKind::S2, {8, 16});
    const FeatureMap x = random_map(s2, 2, 47);
    const FeatureMap y = group_translate(x, GroupElement::so3(2 * kPi / 16, 0, 0));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 16; ++j)
            for (int c = 0; c < 2; ++c)
                CHECK(y.values[s2->s2_index(i, j) * 2 + c] ==
                      doctest::Approx(x.values[s2->s2_index(i, j - 1) * 2 + c]).epsilon(1e-13));
    CHECK_THROWS_AS(group_translate(x, GroupElement::se2(1, 0, 0)), ShapeError);
}
