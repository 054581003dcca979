#include "eckn/signal.hpp"

#include <cmath>
#include <numbers>

#include "eckn/parallel.hpp"

namespace eckn {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSnapTol = 1e-9;

bool is_identity(const GroupElement& g) {
    return g.approx_equal(GroupElement::identity(g.kind()), 0.0);
}
} // namespace

namespace detail {

void split_wrap(double v, int n, int& i0, int& i1, double& w1) {
    double f = v - std::floor(v);
    double base = std::floor(v);
    if (f < kSnapTol) {
        f = 0.0;
    } else if (f > 1.0 - kSnapTol) {
        f = 0.0;
        base += 1.0;
    }
    long long b = static_cast<long long>(base) % n;
    if (b < 0) b += n;
    i0 = static_cast<int>(b);
    i1 = i0 + 1 == n ? 0 : i0 + 1;
    w1 = f;
}

// clamped (non-wrapping) split for the S2/SO3 beta coordinate, v in grid units
void split_clamp(double v, int n, int& i0, int& i1, double& w1) {
    if (v <= 0.0) {
        i0 = i1 = 0;
        w1 = 0.0;
        return;
    }
    if (v >= n - 1.0) {
        i0 = i1 = n - 1;
        w1 = 0.0;
        return;
    }
    double f = v - std::floor(v);
    double base = std::floor(v);
    if (f < kSnapTol) {
        f = 0.0;
    } else if (f > 1.0 - kSnapTol) {
        f = 0.0;
        base += 1.0;
    }
    i0 = static_cast<int>(base);
    i1 = std::min(i0 + 1, n - 1);
    w1 = f;
}

void sample_se2_spatial(const DiscretizedGroup& g, const double* values, int channels, double px,
                        double py, int fiber, double* out) {
    int x0, x1, y0, y1;
    double wx, wy;
    split_wrap(px, g.width, x0, x1, wx);
    split_wrap(py, g.height, y0, y1, wy);
    const std::size_t i00 = g.se2_index(x0, y0, fiber) * channels;
    const std::size_t i10 = g.se2_index(x1, y0, fiber) * channels;
    const std::size_t i01 = g.se2_index(x0, y1, fiber) * channels;
    const std::size_t i11 = g.se2_index(x1, y1, fiber) * channels;
    const double w00 = (1.0 - wx) * (1.0 - wy);
    const double w10 = wx * (1.0 - wy);
    const double w01 = (1.0 - wx) * wy;
    const double w11 = wx * wy;
    for (int c = 0; c < channels; ++c) {
        out[c] = w00 * values[i00 + c] + w10 * values[i10 + c] + w01 * values[i01 + c] +
                 w11 * values[i11 + c];
    }
}

void sample_se2(const DiscretizedGroup& g, const double* values, int channels, double px,
                double py, double theta, FiberInterp fi, double* out) {
    const double tf = wrap_angle(theta) / (kTwoPi / g.n_theta);
    if (fi == FiberInterp::Nearest || g.n_theta == 1) {
        long long t = static_cast<long long>(std::floor(tf + 0.5)) % g.n_theta;
        if (t < 0) t += g.n_theta;
        sample_se2_spatial(g, values, channels, px, py, static_cast<int>(t), out);
        return;
    }
    int t0, t1;
    double wt;
    split_wrap(tf, g.n_theta, t0, t1, wt);
    if (wt == 0.0) {
        sample_se2_spatial(g, values, channels, px, py, t0, out);
        return;
    }
    std::vector<double> a(channels), b(channels);
    sample_se2_spatial(g, values, channels, px, py, t0, a.data());
    sample_se2_spatial(g, values, channels, px, py, t1, b.data());
    for (int c = 0; c < channels; ++c) out[c] = (1.0 - wt) * a[c] + wt * b[c];
}

void sample_s2(const DiscretizedGroup& g, const double* values, int channels, double beta,
               double phi, double* out) {
    // beta_i = pi*(i+0.5)/n_beta  =>  row coordinate beta/step - 0.5
    const double step = std::numbers::pi / g.n_beta;
    int b0, b1, p0, p1;
    double wb, wp;
    split_clamp(beta / step - 0.5, g.n_beta, b0, b1, wb);
    split_wrap(wrap_angle(phi) / (kTwoPi / g.n_phi), g.n_phi, p0, p1, wp);
    const std::size_t i00 = g.s2_index(b0, p0) * channels;
    const std::size_t i10 = g.s2_index(b0, p1) * channels;
    const std::size_t i01 = g.s2_index(b1, p0) * channels;
    const std::size_t i11 = g.s2_index(b1, p1) * channels;
    const double w00 = (1.0 - wb) * (1.0 - wp);
    const double w10 = (1.0 - wb) * wp;
    const double w01 = wb * (1.0 - wp);
    const double w11 = wb * wp;
    for (int c = 0; c < channels; ++c) {
        out[c] = w00 * values[i00 + c] + w10 * values[i10 + c] + w01 * values[i01 + c] +
                 w11 * values[i11 + c];
    }
}

void sample_so3(const DiscretizedGroup& g, const double* values, int channels, double alpha,
                double beta, double gamma, double* out) {
    const double bstep = std::numbers::pi / g.n_beta;
    int a0, a1, b0, b1, c0, c1;
    double wa, wb, wc;
    split_wrap(wrap_angle(alpha) / (kTwoPi / g.n_alpha), g.n_alpha, a0, a1, wa);
    split_clamp(beta / bstep - 0.5, g.n_beta, b0, b1, wb);
    split_wrap(wrap_angle(gamma) / (kTwoPi / g.n_gamma), g.n_gamma, c0, c1, wc);
    for (int c = 0; c < channels; ++c) out[c] = 0.0;
    const int ai[2] = {a0, a1};
    const int bi[2] = {b0, b1};
    const int ci[2] = {c0, c1};
    const double awt[2] = {1.0 - wa, wa};
    const double bwt[2] = {1.0 - wb, wb};
    const double cwt[2] = {1.0 - wc, wc};
    for (int ia = 0; ia < 2; ++ia)
        for (int ib = 0; ib < 2; ++ib)
            for (int ic = 0; ic < 2; ++ic) {
                const double w = awt[ia] * bwt[ib] * cwt[ic];
                if (w == 0.0) continue;
                const std::size_t idx = g.so3_index(ai[ia], bi[ib], ci[ic]) * channels;
                for (int c = 0; c < channels; ++c) out[c] += w * values[idx + c];
            }
}

} // namespace detail

BaseImage make_image(int height, int width, int channels, double fill) {
    if (height <= 0 || width <= 0 || channels <= 0)
        throw ShapeError("make_image: dimensions must be positive");
    BaseImage img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(height) * width * channels, fill);
    return img;
}

FeatureMap make_feature_map(GroupPtr group, int channels, double fill) {
    if (channels <= 0) throw ShapeError("make_feature_map: channels must be positive");
    FeatureMap x;
    x.group = std::move(group);
    x.channels = channels;
    x.values.assign(x.group->size() * channels, fill);
    return x;
}

FeatureMap lift(const BaseImage& img, GroupPtr group) {
    FeatureMap x;
    x.channels = img.channels;
    switch (group->kind) {
    case GroupKind::SE2: {
        if (img.height != group->height || img.width != group->width)
            throw ShapeError("lift: image dims do not match the SE2 grid");
        x.group = group;
        x.values.resize(group->size() * img.channels);
        for (int y = 0; y < img.height; ++y)
            for (int xx = 0; xx < img.width; ++xx)
                for (int t = 0; t < group->n_theta; ++t) {
                    const std::size_t e = group->se2_index(xx, y, t);
                    for (int c = 0; c < img.channels; ++c)
                        x.values[e * img.channels + c] = img.at(y, xx, c);
                }
        return x;
    }
    case GroupKind::S2: {
        if (img.height != group->n_beta || img.width != group->n_phi)
            throw ShapeError("lift: spherical signal dims do not match the S2 grid "
                             "(use stereographic_project for planar images)");
        x.group = group;
        x.values = img.pixels;
        return x;
    }
    default:
        throw ShapeError("lift: unsupported group kind");
    }
}

FeatureMap group_translate(const FeatureMap& x, const GroupElement& g, FiberInterp fi) {
    const DiscretizedGroup& grp = *x.group;
    if (grp.kind == GroupKind::S2) {
        if (g.kind() != GroupKind::SO3)
            throw ShapeError("group_translate: S2 signals transform under SO3 elements");
    } else if (g.kind() != grp.kind) {
        throw ShapeError("group_translate: element variant does not match the signal's group");
    }
    if (is_identity(g)) return x; // bitwise copy

    FeatureMap out;
    out.group = x.group;
    out.channels = x.channels;
    out.layer = x.layer;
    out.values.resize(x.values.size());
    const GroupElement ginv = inverse(g);

    switch (grp.kind) {
    case GroupKind::SE2: {
        const Se2& a = ginv.as_se2();
        const double c = std::cos(a.theta), s = std::sin(a.theta);
        parallel_for(grp.size(), [&](std::size_t e) {
            const Se2& u = grp.elements[e].as_se2();
            const double px = a.tx + c * u.tx - s * u.ty;
            const double py = a.ty + s * u.tx + c * u.ty;
            detail::sample_se2(grp, x.values.data(), x.channels, px, py, a.theta + u.theta, fi,
                               out.values.data() + e * x.channels);
        });
        break;
    }
    case GroupKind::S2: {
        const Eigen::Matrix3d r = ginv.as_so3().rot;
        parallel_for(grp.size(), [&](std::size_t e) {
            const Eigen::Vector3d u = r * grp.elements[e].s2_unit();
            const double beta = std::atan2(std::hypot(u.x(), u.y()), u.z());
            const double phi = std::atan2(u.y(), u.x());
            detail::sample_s2(grp, x.values.data(), x.channels, beta, phi,
                              out.values.data() + e * x.channels);
        });
        break;
    }
    case GroupKind::SO3: {
        const Eigen::Matrix3d r = ginv.as_so3().rot;
        parallel_for(grp.size(), [&](std::size_t e) {
            const So3 q = GroupElement::so3_from_matrix(r * grp.elements[e].as_so3().rot).as_so3();
            detail::sample_so3(grp, x.values.data(), x.channels, q.alpha, q.beta, q.gamma,
                               out.values.data() + e * x.channels);
        });
        break;
    }
    default:
        throw ShapeError("group_translate: unsupported group kind");
    }
    return out;
}

std::vector<double> sample_interpolated(const FeatureMap& x, const GroupElement& point,
                                        FiberInterp fi) {
    const DiscretizedGroup& grp = *x.group;
    std::vector<double> out(x.channels, 0.0);
    switch (grp.kind) {
    case GroupKind::SE2: {
        const Se2& p = point.as_se2();
        detail::sample_se2(grp, x.values.data(), x.channels, p.tx, p.ty, p.theta, fi, out.data());
        break;
    }
    case GroupKind::S2: {
        const S2Point& p = point.as_s2();
        detail::sample_s2(grp, x.values.data(), x.channels, p.beta, p.phi, out.data());
        break;
    }
    case GroupKind::SO3: {
        const So3& p = point.as_so3();
        detail::sample_so3(grp, x.values.data(), x.channels, p.alpha, p.beta, p.gamma, out.data());
        break;
    }
    default:
        throw ShapeError("sample_interpolated: unsupported group kind");
    }
    return out;
}

FeatureMap stereographic_project(const BaseImage& img, GroupPtr s2_grid, double scale) {
    if (s2_grid->kind != GroupKind::S2)
        throw ShapeError("stereographic_project: grid must be an S2 grid");
    FeatureMap x;
    x.group = s2_grid;
    x.channels = img.channels;
    x.values.assign(s2_grid->size() * img.channels, 0.0);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    parallel_for(s2_grid->size(), [&](std::size_t e) {
        const S2Point& p = s2_grid->elements[e].as_s2();
        if (p.beta >= std::numbers::pi - 1e-9) return; // south pole maps to infinity
        const double r = scale * std::tan(p.beta / 2.0);
        const double px = cx + r * std::cos(p.phi);
        const double py = cy + r * std::sin(p.phi);
        if (px < 0.0 || px > img.width - 1 || py < 0.0 || py > img.height - 1) return;
        // bilinear with clamped edges (in-bounds by the check above)
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const int x1 = std::min(x0 + 1, img.width - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        double wx = px - x0, wy = py - y0;
        if (wx < 1e-9) wx = 0.0;
        if (wy < 1e-9) wy = 0.0;
        for (int c = 0; c < img.channels; ++c) {
            x.values[e * img.channels + c] =
                (1.0 - wx) * (1.0 - wy) * img.at(y0, x0, c) + wx * (1.0 - wy) * img.at(y0, x1, c) +
                (1.0 - wx) * wy * img.at(y1, x0, c) + wx * wy * img.at(y1, x1, c);
        }
    });
    return x;
}

double fm_norm(const FeatureMap& a) {
    double s = 0.0, comp = 0.0;
    const std::size_t n = a.size();
    for (std::size_t e = 0; e < n; ++e) {
        double q = 0.0;
        for (int c = 0; c < a.channels; ++c) {
            const double v = a.values[e * a.channels + c];
            q += v * v;
        }
        const double term = a.group->haar_weights[e] * q;
        const double y = term - comp;
        const double u = s + y;
        comp = (u - s) - y;
        s = u;
    }
    return std::sqrt(s);
}

double fm_distance(const FeatureMap& a, const FeatureMap& b) {
    if (a.group.get() != b.group.get() &&
        (a.group->kind != b.group->kind || a.size() != b.size()))
        throw ShapeError("fm_distance: feature maps live on different groups");
    if (a.channels != b.channels) throw ShapeError("fm_distance: channel counts differ");
    if (a.size() != b.size()) throw ShapeError("fm_distance: sizes differ");
    double s = 0.0, comp = 0.0;
    const std::size_t n = a.size();
    for (std::size_t e = 0; e < n; ++e) {
        double q = 0.0;
        for (int c = 0; c < a.channels; ++c) {
            const double d = a.values[e * a.channels + c] - b.values[e * a.channels + c];
            q += d * d;
        }
        const double term = a.group->haar_weights[e] * q;
        const double y = term - comp;
        const double u = s + y;
        comp = (u - s) - y;
        s = u;
    }
    return std::sqrt(s);
}

FeatureMap fiber_average(const FeatureMap& x) {
    const DiscretizedGroup& grp = *x.group;
    if (grp.kind != GroupKind::SE2 || grp.n_theta == 1) return x;
    auto flat = build_group(GroupKind::SE2, {grp.height, grp.width, 1});
    FeatureMap out = make_feature_map(flat, x.channels);
    const double inv = 1.0 / grp.n_theta;
    for (int y = 0; y < grp.height; ++y)
        for (int xx = 0; xx < grp.width; ++xx) {
            const std::size_t o = flat->se2_index(xx, y, 0);
            for (int c = 0; c < x.channels; ++c) {
                double s = 0.0;
                for (int t = 0; t < grp.n_theta; ++t)
                    s += x.values[grp.se2_index(xx, y, t) * x.channels + c];
                out.values[o * x.channels + c] = s * inv;
            }
        }
    return out;
}

} // namespace eckn
