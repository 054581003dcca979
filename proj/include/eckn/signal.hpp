#pragma once

#include <optional>
#include <vector>

#include "eckn/group.hpp"

namespace eckn {

// Plain raster image with pixel values in [0, 1].
struct BaseImage {
    int height = 0, width = 0, channels = 1;
    std::vector<double> pixels; // (y*width + x)*channels + c

    double at(int y, int x, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double& at(int y, int x, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

BaseImage make_image(int height, int width, int channels = 1, double fill = 0.0);

enum class FiberInterp { Nearest, Linear };

// Channel-valued signal over a discretized group. Values are stored
// (element, channel) row-major; all operations treat the map as immutable.
struct FeatureMap {
    GroupPtr group;
    int channels = 0;
    int layer = 0;
    std::vector<double> values;
    std::optional<double> cached_norm;

    double at(std::size_t e, int c) const { return values[e * channels + c]; }
    double& at(std::size_t e, int c) { return values[e * channels + c]; }
    std::size_t size() const { return group ? group->size() : 0; }
};

FeatureMap make_feature_map(GroupPtr group, int channels, double fill = 0.0);

// Canonical lift of a raster image: constant along the fiber for SE2,
// direct copy for matching S2 grids.
FeatureMap lift(const BaseImage& img, GroupPtr group);

// (L_g x)(u) = x(g^{-1} u). Lattice-exact g yields an exact permutation of
// the stored values; identity returns a bitwise copy.
FeatureMap group_translate(const FeatureMap& x, const GroupElement& g,
                           FiberInterp fi = FiberInterp::Nearest);

// Interpolated read at a continuous group point: bilinear over spatial
// dimensions (wraparound for SE2, phi-wrap/beta-clamp for S2 and SO3),
// nearest fiber by default. Exact at lattice points.
std::vector<double> sample_interpolated(const FeatureMap& x, const GroupElement& point,
                                        FiberInterp fi = FiberInterp::Nearest);

// Inverse stereographic projection about the north pole: the sphere point at
// colatitude beta lands on the image plane at radius scale*tan(beta/2) pixels
// from the image center. Points outside the image read as 0.
FeatureMap stereographic_project(const BaseImage& img, GroupPtr s2_grid, double scale);

// Haar-weighted L2 norm / distance.
double fm_norm(const FeatureMap& a);
double fm_distance(const FeatureMap& a, const FeatureMap& b);

// Average over the SE2 fiber; result lives on the matching n_theta = 1 grid.
// Maps without a fiber pass through unchanged.
FeatureMap fiber_average(const FeatureMap& x);

namespace detail {

// Low-level samplers used by the hot kernels. `values` has the layout of a
// FeatureMap on `g`; `out` receives `channels` doubles.
void sample_se2_spatial(const DiscretizedGroup& g, const double* values, int channels, double px,
                        double py, int fiber, double* out);
void sample_se2(const DiscretizedGroup& g, const double* values, int channels, double px,
                double py, double theta, FiberInterp fi, double* out);
void sample_s2(const DiscretizedGroup& g, const double* values, int channels, double beta,
               double phi, double* out);
void sample_so3(const DiscretizedGroup& g, const double* values, int channels, double alpha,
                double beta, double gamma, double* out);

// Fractional split with snapping: offsets within 1e-9 of a lattice point are
// snapped so that lattice-exact group actions stay exact permutations.
void split_wrap(double v, int n, int& i0, int& i1, double& w1);

} // namespace detail

} // namespace eckn
