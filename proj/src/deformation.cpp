#include "eckn/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eckn/network.hpp"
#include "eckn/parallel.hpp"
#include "eckn/rng.hpp"

namespace eckn {

namespace {

// periodic separable Gaussian smoothing of a 2-component field
void smooth_periodic(std::vector<double>& field, int height, int width, double scale,
                     bool wrap_rows) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * scale)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (scale * scale));
        total += kernel[i + radius];
    }
    for (double& k : kernel) k /= total;

    std::vector<double> tmp(field.size());
    auto idx = [width](int r, int c, int comp) {
        return (static_cast<std::size_t>(r) * width + c) * 2 + comp;
    };
    // along columns (x / phi direction), always periodic
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int comp = 0; comp < 2; ++comp) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int cc = ((c + i) % width + width) % width;
                    s += kernel[i + radius] * field[idx(r, cc, comp)];
                }
                tmp[idx(r, c, comp)] = s;
            }
    // along rows (y / beta direction): periodic for flat grids, clamped for
    // the sphere chart
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int comp = 0; comp < 2; ++comp) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int rr = r + i;
                    if (wrap_rows) {
                        rr = (rr % height + height) % height;
                    } else {
                        rr = std::clamp(rr, 0, height - 1);
                    }
                    s += kernel[i + radius] * tmp[idx(rr, c, comp)];
                }
                field[idx(r, c, comp)] = s;
            }
}

// spectral norm of a 2x2 matrix [[a, b], [c, d]] in closed form
double spectral_norm_2x2(double a, double b, double c, double d) {
    const double t1 = a * a + b * b + c * c + d * d;
    const double t2 = std::hypot(a * a + b * b - c * c - d * d, 2.0 * (a * c + b * d));
    return std::sqrt(0.5 * (t1 + t2));
}

} // namespace

double grad_sup_norm(const DeformationField& tau) {
    const int h = tau.height, w = tau.width;
    const bool sphere = tau.kind == GroupKind::S2;
    const double row_step = sphere ? std::numbers::pi / h : 1.0;
    const double col_step = sphere ? 2.0 * std::numbers::pi / w : 1.0;
    double worst = 0.0;
    for (int r = 0; r < h; ++r) {
        if (sphere && (r == 0 || r == h - 1)) continue; // pole rows excluded
        const int rp = (r + 1) % h, rm = (r - 1 + h) % h;
        // metric correction: column derivatives are per unit arc length
        const double metric = sphere ? std::sin(row_step * (r + 0.5)) : 1.0;
        for (int c = 0; c < w; ++c) {
            const int cp = (c + 1) % w, cm = (c - 1 + w) % w;
            const double j00 = (tau.du(r, cp) - tau.du(r, cm)) * 0.5 / (col_step * metric);
            const double j01 = (tau.du(rp, c) - tau.du(rm, c)) * 0.5 / row_step;
            const double j10 = (tau.dv(r, cp) - tau.dv(r, cm)) * 0.5 / (col_step * metric);
            const double j11 = (tau.dv(rp, c) - tau.dv(rm, c)) * 0.5 / row_step;
            worst = std::max(worst, spectral_norm_2x2(j00, j01, j10, j11));
        }
    }
    return worst;
}

double sup_norm(const DeformationField& tau) {
    double worst = 0.0;
    for (int r = 0; r < tau.height; ++r) {
        if (tau.kind == GroupKind::S2 && (r == 0 || r == tau.height - 1)) continue;
        for (int c = 0; c < tau.width; ++c)
            worst = std::max(worst, std::hypot(tau.du(r, c), tau.dv(r, c)));
    }
    return worst;
}

DeformationField generate_tau(GroupKind kind, int height, int width, double smoothness,
                              double target_grad, std::uint64_t seed) {
    if (target_grad <= 0.0 || target_grad > 0.5)
        throw ShapeError("generate_tau: target_grad must be in (0, 1/2]");
    if (smoothness <= 0.0) throw ShapeError("generate_tau: smoothness must be positive");
    if (height <= 0 || width <= 0) throw ShapeError("generate_tau: grid dims must be positive");

    DeformationField tau;
    tau.kind = kind;
    tau.height = height;
    tau.width = width;
    tau.seed = seed;
    tau.smoothness = smoothness;
    tau.displacement.resize(static_cast<std::size_t>(height) * width * 2);
    Rng rng(seed);
    for (double& v : tau.displacement) v = rng.normal();
    smooth_periodic(tau.displacement, height, width, smoothness, kind != GroupKind::S2);

    const double g = grad_sup_norm(tau);
    if (g < 1e-15)
        throw NumericError("generate_tau: smoothed field is constant; cannot hit target_grad");
    const double scale = target_grad / g;
    for (double& v : tau.displacement) v *= scale;
    tau.grad_sup = grad_sup_norm(tau);
    tau.sup = sup_norm(tau);
    return tau;
}

DeformationField scale_tau(const DeformationField& tau, double factor) {
    DeformationField out = tau;
    for (double& v : out.displacement) v *= factor;
    out.grad_sup = grad_sup_norm(out);
    out.sup = sup_norm(out);
    return out;
}

FeatureMap apply_deformation(const FeatureMap& x, const DeformationField& tau, double alpha,
                             bool strict) {
    if (alpha == 0.0) return x; // bitwise copy
    if (strict && alpha * tau.grad_sup > 0.5 + 1e-12)
        throw ShapeError("apply_deformation: alpha*grad_sup exceeds 1/2");
    const DiscretizedGroup& g = *x.group;
    FeatureMap out;
    out.group = x.group;
    out.channels = x.channels;
    out.layer = x.layer;
    out.values.resize(x.values.size());

    switch (g.kind) {
    case GroupKind::SE2: {
        if (tau.height != g.height || tau.width != g.width)
            throw ShapeError("apply_deformation: field dims do not match the grid");
        parallel_for(g.size(), [&](std::size_t e) {
            const Se2& u = g.elements[e].as_se2();
            const int t = static_cast<int>(e % g.n_theta);
            const int col = static_cast<int>(u.tx), row = static_cast<int>(u.ty);
            const double px = u.tx - alpha * tau.du(row, col);
            const double py = u.ty - alpha * tau.dv(row, col);
            detail::sample_se2_spatial(g, x.values.data(), x.channels, px, py, t,
                                       out.values.data() + e * x.channels);
        });
        break;
    }
    case GroupKind::S2: {
        if (tau.height != g.n_beta || tau.width != g.n_phi)
            throw ShapeError("apply_deformation: field dims do not match the grid");
        parallel_for(g.size(), [&](std::size_t e) {
            const S2Point& p = g.elements[e].as_s2();
            const int row = static_cast<int>(e) / g.n_phi;
            const int col = static_cast<int>(e) % g.n_phi;
            const double beta = p.beta - alpha * tau.du(row, col);
            const double phi = p.phi - alpha * tau.dv(row, col);
            detail::sample_s2(g, x.values.data(), x.channels, beta, phi,
                              out.values.data() + e * x.channels);
        });
        break;
    }
    default:
        throw ShapeError("apply_deformation: unsupported group kind");
    }
    return out;
}

BaseImage deform_image(const BaseImage& img, const DeformationField& tau, double alpha) {
    if (alpha == 0.0) return img; // bitwise copy
    if (tau.height != img.height || tau.width != img.width)
        throw ShapeError("deform_image: field dims do not match the image");
    auto grid = build_group(GroupKind::SE2, {img.height, img.width, 1});
    FeatureMap x = lift(img, grid);
    FeatureMap y = apply_deformation(x, tau, alpha);
    BaseImage out = img;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = y.values[grid->se2_index(c, r, 0) * img.channels + ch];
    return out;
}

FeatureMap band_limited_probe(GroupPtr group, int channels, std::uint64_t seed) {
    FeatureMap x = make_feature_map(group, channels);
    Rng rng(seed);
    for (double& v : x.values) v = rng.normal();
    FeatureMap smooth = pool(x, make_gaussian_filter(*group, 1.0));
    const double nrm = fm_norm(smooth);
    if (nrm < 1e-12) throw NumericError("band_limited_probe: degenerate probe");
    for (double& v : smooth.values) v /= nrm;
    return smooth;
}

double probe_commutator_norm(const FmOperator& a, const FmOperator& b, GroupPtr group,
                             int channels, int n_probes, std::uint64_t seed) {
    double worst = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        const FeatureMap x = band_limited_probe(group, channels, derive_seed(seed, i));
        worst = std::max(worst, fm_distance(a(b(x)), b(a(x))));
    }
    return worst;
}

double probe_difference_norm(const FmOperator& a, const FmOperator& b, GroupPtr group,
                             int channels, int n_probes, std::uint64_t seed) {
    double worst = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        const FeatureMap x = band_limited_probe(group, channels, derive_seed(seed, i));
        worst = std::max(worst, fm_distance(a(x), b(x)));
    }
    return worst;
}

} // namespace eckn
