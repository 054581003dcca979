#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "eckn/signal.hpp"

namespace eckn {

// C1 displacement field tau over a 2D base grid. Components are stored per
// point as (du, dv): grid units (x, y) for flat grids, radians (beta, phi)
// for the sphere chart. grad_sup is the max spectral norm of the
// finite-difference Jacobian, sup the max Euclidean displacement.
struct DeformationField {
    GroupKind kind = GroupKind::SE2;
    int height = 0, width = 0; // rows, cols of the base grid
    std::vector<double> displacement; // (row*width + col)*2 + component
    double grad_sup = 0.0;
    double sup = 0.0;
    std::uint64_t seed = 0;
    double smoothness = 0.0;

    double du(int row, int col) const {
        return displacement[(static_cast<std::size_t>(row) * width + col) * 2];
    }
    double dv(int row, int col) const {
        return displacement[(static_cast<std::size_t>(row) * width + col) * 2 + 1];
    }
    // deformations with grad_sup <= 1/2 stay invertible
    bool admissible() const { return grad_sup <= 0.5 + 1e-12; }
};

// Gaussian white-noise displacements smoothed at scale `smoothness` (periodic
// for flat grids, periodic in phi on the sphere chart), then rescaled so that
// grad_sup equals target_grad. Deterministic per seed.
DeformationField generate_tau(GroupKind kind, int height, int width, double smoothness,
                              double target_grad, std::uint64_t seed);

// Recomputation of the stored norms (central differences, periodic; the
// sphere chart corrects the phi-derivative by 1/sin(beta) and excludes the
// pole rows from the sup).
double grad_sup_norm(const DeformationField& tau);
double sup_norm(const DeformationField& tau);

DeformationField scale_tau(const DeformationField& tau, double factor);

// (L_{alpha tau} x)(u, h) = x(u - alpha*tau(u), h): base-space resampling,
// fiber untouched. alpha = 0 returns a bitwise copy. With strict set, an
// inadmissible alpha*grad_sup > 1/2 raises ShapeError.
FeatureMap apply_deformation(const FeatureMap& x, const DeformationField& tau, double alpha,
                             bool strict = false);

// Same resampling on a raster image (wraparound boundary).
BaseImage deform_image(const BaseImage& img, const DeformationField& tau, double alpha);

using FmOperator = std::function<FeatureMap(const FeatureMap&)>;

// Max over seeded band-limited unit-norm probes of |(AB - BA) x|: a lower
// bound estimate of the commutator operator norm. Deterministic per seed.
double probe_commutator_norm(const FmOperator& a, const FmOperator& b, GroupPtr group,
                             int channels, int n_probes, std::uint64_t seed);

// Max over the same probe family of |A(x) - B(x)|.
double probe_difference_norm(const FmOperator& a, const FmOperator& b, GroupPtr group,
                             int channels, int n_probes, std::uint64_t seed);

// Gaussian-smoothed white noise (smoothing scale one grid step), unit norm.
FeatureMap band_limited_probe(GroupPtr group, int channels, std::uint64_t seed);

} // namespace eckn
