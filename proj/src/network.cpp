#include "eckn/network.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include "eckn/keyvalue.hpp"
#include "eckn/parallel.hpp"
#include "eckn/rng.hpp"

namespace eckn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// sparse symmetric support structure used to assemble pooling operators
struct Supports {
    std::vector<std::size_t> start;
    std::vector<std::uint32_t> index;
    std::vector<double> weight; // raw filter profile h(u, v)
};

// Symmetric Sinkhorn balancing: finds d > 0 with the coefficients
// c_uv = d_u h_uv d_v w_v having unit row sums; by symmetry of h the
// Haar-weighted column masses balance as well, which pins the Schur bound of
// the operator at 1. A final exact row normalization makes constants exact.
PoolFilter balance_supports(const DiscretizedGroup& group, Supports s, double sigma,
                            std::string kind, bool symmetric) {
    const std::size_t n = group.size();
    PoolFilter f;
    f.sigma = sigma;
    f.kind = std::move(kind);
    f.start = std::move(s.start);
    f.index = std::move(s.index);
    f.coeff.resize(s.weight.size());

    std::vector<double> d(n, 1.0), rho(n, 0.0);
    if (symmetric) {
        for (int iter = 0; iter < 1000; ++iter) {
            double worst = 0.0;
            for (std::size_t u = 0; u < n; ++u) {
                double r = 0.0;
                for (std::size_t j = f.start[u]; j < f.start[u + 1]; ++j)
                    r += s.weight[j] * d[f.index[j]] * group.haar_weights[f.index[j]];
                rho[u] = r;
                worst = std::max(worst, std::abs(d[u] * r - 1.0));
            }
            if (worst < 1e-13) break;
            for (std::size_t u = 0; u < n; ++u) d[u] = std::sqrt(d[u] / rho[u]);
        }
    }
    for (std::size_t u = 0; u < n; ++u) {
        double rowsum = 0.0;
        for (std::size_t j = f.start[u]; j < f.start[u + 1]; ++j) {
            f.coeff[j] = d[u] * s.weight[j] * d[f.index[j]] * group.haar_weights[f.index[j]];
            rowsum += f.coeff[j];
        }
        for (std::size_t j = f.start[u]; j < f.start[u + 1]; ++j) f.coeff[j] /= rowsum;
    }
    return f;
}

double gaussian_cutoff(double sigma_len) { return 3.0 * sigma_len * (1.0 + 1e-9); }

// toroidal wrap of a signed offset into [-n/2, n/2)
double wrap_half(double v, int n) {
    double w = v - n * std::floor(v / n);
    if (w >= n / 2.0) w -= n;
    return w;
}

Supports se2_gaussian_supports(const DiscretizedGroup& g, double sigma) {
    const double cut = std::min(gaussian_cutoff(sigma), (std::min(g.width, g.height) - 1) / 2.0);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    // shared spatial stencil
    std::vector<std::array<int, 2>> offs;
    std::vector<double> w;
    const int r = static_cast<int>(std::floor(cut));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double dist = std::hypot(dx, dy);
            if (dist <= cut) {
                offs.push_back({dx, dy});
                w.push_back(std::exp(-dist * dist * inv2s2));
            }
        }
    Supports s;
    const std::size_t n = g.size();
    s.start.resize(n + 1);
    s.start[0] = 0;
    s.index.resize(n * offs.size());
    s.weight.resize(n * offs.size());
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            for (int t = 0; t < g.n_theta; ++t) {
                const std::size_t u = g.se2_index(x, y, t);
                std::size_t j = u * offs.size();
                for (std::size_t k = 0; k < offs.size(); ++k, ++j) {
                    s.index[j] = static_cast<std::uint32_t>(
                        g.se2_index(x + offs[k][0], y + offs[k][1], t));
                    s.weight[j] = w[k];
                }
                s.start[u + 1] = j;
            }
    return s;
}

Supports s2_gaussian_supports(const DiscretizedGroup& g, double sigma) {
    const double sigma_len = sigma * g.grid_step();
    const double cut = std::min(gaussian_cutoff(sigma_len), std::numbers::pi);
    const double inv2s2 = 1.0 / (2.0 * sigma_len * sigma_len);
    const std::size_t n = g.size();
    std::vector<Eigen::Vector3d> unit(n);
    for (std::size_t e = 0; e < n; ++e) unit[e] = g.elements[e].s2_unit();
    Supports s;
    s.start.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            const double d = std::atan2(unit[u].cross(unit[v]).norm(), unit[u].dot(unit[v]));
            if (d <= cut) {
                s.index.push_back(static_cast<std::uint32_t>(v));
                s.weight.push_back(std::exp(-d * d * inv2s2));
            }
        }
        s.start[u + 1] = s.index.size();
    }
    return s;
}

Supports so3_gaussian_supports(const DiscretizedGroup& g, double sigma) {
    const double sigma_len = sigma * g.grid_step();
    const double cut = std::min(gaussian_cutoff(sigma_len), std::numbers::pi);
    const double inv2s2 = 1.0 / (2.0 * sigma_len * sigma_len);
    const std::size_t n = g.size();
    Supports s;
    s.start.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
        const Eigen::Matrix3d rt = g.elements[u].as_so3().rot.transpose();
        for (std::size_t v = 0; v < n; ++v) {
            const double tr = (rt * g.elements[v].as_so3().rot).trace();
            const double d = std::acos(std::clamp((tr - 1.0) * 0.5, -1.0, 1.0));
            if (d <= cut) {
                s.index.push_back(static_cast<std::uint32_t>(v));
                s.weight.push_back(std::exp(-d * d * inv2s2));
            }
        }
        s.start[u + 1] = s.index.size();
    }
    return s;
}

FeatureMap apply_filter(const FeatureMap& x, const PoolFilter& f) {
    FeatureMap out;
    out.group = x.group;
    out.channels = x.channels;
    out.layer = x.layer;
    out.values.resize(x.values.size());
    const int ch = x.channels;
    parallel_for(x.size(), [&](std::size_t u) {
        double* o = out.values.data() + u * ch;
        for (int c = 0; c < ch; ++c) o[c] = 0.0;
        for (std::size_t j = f.start[u]; j < f.start[u + 1]; ++j) {
            const double w = f.coeff[j];
            const double* src = x.values.data() + static_cast<std::size_t>(f.index[j]) * ch;
            for (int c = 0; c < ch; ++c) o[c] += w * src[c];
        }
    });
    return out;
}

} // namespace

PoolFilter make_gaussian_filter(const DiscretizedGroup& group, double sigma) {
    if (sigma <= 0.0) throw ShapeError("make_gaussian_filter: sigma must be positive");
    Supports s;
    switch (group.kind) {
    case GroupKind::SE2: s = se2_gaussian_supports(group, sigma); break;
    case GroupKind::S2: s = s2_gaussian_supports(group, sigma); break;
    case GroupKind::SO3: s = so3_gaussian_supports(group, sigma); break;
    default: throw ShapeError("make_gaussian_filter: unsupported group kind");
    }
    return balance_supports(group, std::move(s), sigma, "gaussian", true);
}

PoolFilter make_stencil_filter(const DiscretizedGroup& group,
                               const std::vector<std::pair<std::array<int, 2>, double>>& offsets) {
    if (group.kind != GroupKind::SE2)
        throw ShapeError("make_stencil_filter: stencils are defined on translation grids");
    if (offsets.empty()) throw ShapeError("make_stencil_filter: empty stencil");
    // symmetric stencils keep the Schur bound; asymmetric ones are only
    // row-normalized
    bool symmetric = true;
    for (const auto& [o, w] : offsets) {
        bool found = false;
        for (const auto& [o2, w2] : offsets)
            if (o2[0] == -o[0] && o2[1] == -o[1] && w2 == w) {
                found = true;
                break;
            }
        if (!found) symmetric = false;
    }
    Supports s;
    const std::size_t n = group.size();
    s.start.resize(n + 1);
    s.start[0] = 0;
    s.index.resize(n * offsets.size());
    s.weight.resize(n * offsets.size());
    for (int y = 0; y < group.height; ++y)
        for (int x = 0; x < group.width; ++x)
            for (int t = 0; t < group.n_theta; ++t) {
                const std::size_t u = group.se2_index(x, y, t);
                std::size_t j = u * offsets.size();
                for (std::size_t k = 0; k < offsets.size(); ++k, ++j) {
                    s.index[j] = static_cast<std::uint32_t>(
                        group.se2_index(x + offsets[k].first[0], y + offsets[k].first[1], t));
                    s.weight[j] = offsets[k].second;
                }
                s.start[u + 1] = j;
            }
    PoolFilter f = balance_supports(group, std::move(s), 0.0, "stencil", symmetric);
    f.stencil = offsets;
    return f;
}

double pf_norm(const PatchField& p) {
    double s = 0.0, comp = 0.0;
    for (std::size_t e = 0; e < p.group->size(); ++e) {
        double q = 0.0;
        for (int i = 0; i < p.dim; ++i) {
            const double v = p.values[e * p.dim + i];
            q += v * v;
        }
        const double term = p.group->haar_weights[e] * q;
        const double y = term - comp;
        const double u = s + y;
        comp = (u - s) - y;
        s = u;
    }
    return std::sqrt(s);
}

double pf_distance(const PatchField& a, const PatchField& b) {
    if (a.dim != b.dim || a.values.size() != b.values.size())
        throw ShapeError("pf_distance: patch fields differ in shape");
    double s = 0.0, comp = 0.0;
    for (std::size_t e = 0; e < a.group->size(); ++e) {
        double q = 0.0;
        for (int i = 0; i < a.dim; ++i) {
            const double d = a.values[e * a.dim + i] - b.values[e * a.dim + i];
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

PatchField extract_patches(const FeatureMap& x, const PatchShape& patch) {
    const DiscretizedGroup& g = *x.group;
    const int ch = x.channels;
    const int ns = static_cast<int>(patch.size());
    PatchField out;
    out.group = x.group;
    out.channels = ch;
    out.dim = ns * ch;
    out.values.resize(g.size() * out.dim);

    std::vector<double> sqw(ns);
    for (int k = 0; k < ns; ++k) sqw[k] = std::sqrt(patch.weights[k]);

    switch (g.kind) {
    case GroupKind::SE2: {
        // offsets rotate with the fiber: gather at u_xy + R_theta * c
        std::vector<double> odx(ns), ody(ns);
        for (int k = 0; k < ns; ++k) {
            const Se2& c = patch.offsets[k].as_se2();
            odx[k] = c.tx;
            ody[k] = c.ty;
        }
        std::vector<double> ct(g.n_theta), st(g.n_theta);
        for (int t = 0; t < g.n_theta; ++t) {
            const double theta = wrap_angle(kTwoPi * t / g.n_theta);
            ct[t] = std::cos(theta);
            st[t] = std::sin(theta);
        }
        parallel_for(g.size(), [&](std::size_t e) {
            const Se2& u = g.elements[e].as_se2();
            const int t = static_cast<int>(e % g.n_theta);
            double* row = out.values.data() + e * out.dim;
            for (int k = 0; k < ns; ++k) {
                const double px = u.tx + ct[t] * odx[k] - st[t] * ody[k];
                const double py = u.ty + st[t] * odx[k] + ct[t] * ody[k];
                detail::sample_se2_spatial(g, x.values.data(), ch, px, py, t, row + k * ch);
                for (int c = 0; c < ch; ++c) row[k * ch + c] *= sqw[k];
            }
        });
        break;
    }
    case GroupKind::S2: {
        parallel_for(g.size(), [&](std::size_t e) {
            double* row = out.values.data() + e * out.dim;
            for (int k = 0; k < ns; ++k) {
                const S2Point q = compose(g.elements[e], patch.offsets[k]).as_s2();
                detail::sample_s2(g, x.values.data(), ch, q.beta, q.phi, row + k * ch);
                for (int c = 0; c < ch; ++c) row[k * ch + c] *= sqw[k];
            }
        });
        break;
    }
    case GroupKind::SO3: {
        parallel_for(g.size(), [&](std::size_t e) {
            double* row = out.values.data() + e * out.dim;
            for (int k = 0; k < ns; ++k) {
                const So3 q = compose(g.elements[e], patch.offsets[k]).as_so3();
                detail::sample_so3(g, x.values.data(), ch, q.alpha, q.beta, q.gamma, row + k * ch);
                for (int c = 0; c < ch; ++c) row[k * ch + c] *= sqw[k];
            }
        });
        break;
    }
    default:
        throw ShapeError("extract_patches: unsupported group kind");
    }
    return out;
}

FeatureMap kernel_map(const PatchField& patches, const NystromEmbedding& emb) {
    if (patches.dim != emb.patch_dim())
        throw ShapeError("kernel_map: patch dimension does not match the embedding");
    FeatureMap out;
    out.group = patches.group;
    out.channels = emb.p();
    out.values.resize(patches.group->size() * emb.p());
    parallel_for(patches.group->size(), [&](std::size_t e) {
        embed_patch(emb, patches.values.data() + e * patches.dim,
                    out.values.data() + e * out.channels);
    });
    return out;
}

FeatureMap pool(const FeatureMap& x, const PoolFilter& filter) {
    if (filter.start.size() != x.size() + 1)
        throw ShapeError("pool: filter was compiled for a different group");
    return apply_filter(x, filter);
}

FeatureMap pool(const FeatureMap& x, double sigma) {
    return pool(x, make_gaussian_filter(*x.group, sigma));
}

FeatureMap pool_as_cross_correlation(const FeatureMap& x, const PoolFilter& filter) {
    const DiscretizedGroup& g = *x.group;
    const std::size_t n = g.size();
    Supports s;
    s.start.assign(n + 1, 0);
    bool symmetric = true;

    if (filter.kind == "stencil") {
        // h(u^{-1} v) read off the stencil at the wrapped lattice offset
        for (const auto& [o, w] : filter.stencil) {
            bool found = false;
            for (const auto& [o2, w2] : filter.stencil)
                if (o2[0] == -o[0] && o2[1] == -o[1] && w2 == w) found = true;
            if (!found) symmetric = false;
        }
        for (std::size_t u = 0; u < n; ++u) {
            const Se2& uu = g.elements[u].as_se2();
            for (std::size_t v = 0; v < n; ++v) {
                const Se2& vv = g.elements[v].as_se2();
                if (std::abs(wrap_signed(vv.theta - uu.theta)) > 1e-9) continue;
                const double dx = wrap_half(vv.tx - uu.tx, g.width);
                const double dy = wrap_half(vv.ty - uu.ty, g.height);
                for (const auto& [o, w] : filter.stencil) {
                    if (std::abs(dx - o[0]) < 1e-9 && std::abs(dy - o[1]) < 1e-9) {
                        s.index.push_back(static_cast<std::uint32_t>(v));
                        s.weight.push_back(w);
                        break;
                    }
                }
            }
            s.start[u + 1] = s.index.size();
        }
        return apply_filter(x, balance_supports(g, std::move(s), 0.0, "stencil-cc", symmetric));
    }

    const double sigma = filter.sigma;
    if (sigma <= 0.0) throw ShapeError("pool_as_cross_correlation: filter has no Gaussian scale");
    const double sigma_len = sigma * g.grid_step();
    const double inv2s2 = 1.0 / (2.0 * sigma_len * sigma_len);

    switch (g.kind) {
    case GroupKind::SE2: {
        const double cut =
            std::min(gaussian_cutoff(sigma), (std::min(g.width, g.height) - 1) / 2.0);
        for (std::size_t u = 0; u < n; ++u) {
            const GroupElement uinv = inverse(g.elements[u]);
            const double c = std::cos(uinv.as_se2().theta), sn = std::sin(uinv.as_se2().theta);
            for (std::size_t v = 0; v < n; ++v) {
                const GroupElement q = compose(uinv, g.elements[v]);
                const Se2& qq = q.as_se2();
                if (std::abs(wrap_signed(qq.theta)) > 1e-9) continue; // fiber untouched
                // minimal toroidal alias of the base offset
                double best = std::numeric_limits<double>::infinity();
                for (int m = -1; m <= 1; ++m)
                    for (int k = -1; k <= 1; ++k) {
                        const double ax = qq.tx + c * (m * g.width) - sn * (k * g.height);
                        const double ay = qq.ty + sn * (m * g.width) + c * (k * g.height);
                        best = std::min(best, std::hypot(ax, ay));
                    }
                if (best <= cut) {
                    s.index.push_back(static_cast<std::uint32_t>(v));
                    s.weight.push_back(std::exp(-best * best * inv2s2));
                }
            }
            s.start[u + 1] = s.index.size();
        }
        break;
    }
    case GroupKind::S2: {
        const double cut = std::min(gaussian_cutoff(sigma_len), std::numbers::pi);
        for (std::size_t u = 0; u < n; ++u) {
            const S2Point& p = g.elements[u].as_s2();
            const Eigen::Matrix3d rinv =
                (Eigen::AngleAxisd(-p.beta, Eigen::Vector3d::UnitY()) *
                 Eigen::AngleAxisd(-p.phi, Eigen::Vector3d::UnitZ()))
                    .toRotationMatrix();
            for (std::size_t v = 0; v < n; ++v) {
                const Eigen::Vector3d q = rinv * g.elements[v].s2_unit();
                const double d = std::atan2(std::hypot(q.x(), q.y()), q.z());
                if (d <= cut) {
                    s.index.push_back(static_cast<std::uint32_t>(v));
                    s.weight.push_back(std::exp(-d * d * inv2s2));
                }
            }
            s.start[u + 1] = s.index.size();
        }
        break;
    }
    case GroupKind::SO3: {
        const double cut = std::min(gaussian_cutoff(sigma_len), std::numbers::pi);
        for (std::size_t u = 0; u < n; ++u) {
            const GroupElement uinv = inverse(g.elements[u]);
            for (std::size_t v = 0; v < n; ++v) {
                const GroupElement q = compose(uinv, g.elements[v]);
                const double d = rotation_angle(q.as_so3());
                if (d <= cut) {
                    s.index.push_back(static_cast<std::uint32_t>(v));
                    s.weight.push_back(std::exp(-d * d * inv2s2));
                }
            }
            s.start[u + 1] = s.index.size();
        }
        break;
    }
    default:
        throw ShapeError("pool_as_cross_correlation: unsupported group kind");
    }
    return apply_filter(x, balance_supports(g, std::move(s), sigma, "gaussian-cc", true));
}

FeatureMap pool_as_cross_correlation(const FeatureMap& x, double sigma) {
    PoolFilter f;
    f.sigma = sigma;
    f.kind = "gaussian";
    return pool_as_cross_correlation(x, f);
}

std::vector<double> global_pool(const FeatureMap& x) {
    std::vector<double> out(x.channels, 0.0);
    std::vector<double> comp(x.channels, 0.0);
    for (std::size_t e = 0; e < x.size(); ++e) {
        const double w = x.group->haar_weights[e];
        for (int c = 0; c < x.channels; ++c) {
            const double y = w * x.values[e * x.channels + c] - comp[c];
            const double u = out[c] + y;
            comp[c] = (u - out[c]) - y;
            out[c] = u;
        }
    }
    return out;
}

namespace {

void validate_spec(const NetworkSpec& spec) {
    if (spec.layers.empty()) throw ShapeError("network: at least one layer required");
    if (spec.sigma0 < 0.0) throw ShapeError("network: sigma0 must be >= 0");
    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        if (spec.layers[k].sigma <= 0.0) throw ShapeError("network: sigma must be positive");
        if (k > 0 && spec.layers[k].sigma <= spec.layers[k - 1].sigma)
            throw ShapeError("network: pooling scales must be strictly increasing across layers");
    }
}

double sigma_prev_for_layer(const NetworkSpec& spec, std::size_t k) {
    if (k == 0) return spec.sigma0 > 0.0 ? spec.sigma0 : 1.0;
    return spec.layers[k - 1].sigma;
}

} // namespace

Network build_network(const NetworkSpec& spec, GroupPtr group,
                      std::vector<NystromEmbedding> embeddings) {
    validate_spec(spec);
    if (embeddings.size() != spec.layers.size())
        throw ShapeError("build_network: one embedding per layer required");
    Network net;
    net.group = group;
    net.sigma0 = spec.sigma0;
    if (spec.sigma0 > 0.0) net.input_filter = make_gaussian_filter(*group, spec.sigma0);
    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        const LayerSpec& ls = spec.layers[k];
        LayerConfig lc;
        lc.patch = build_patch_shape(*group, ls.kappa, sigma_prev_for_layer(spec, k),
                                     ls.fiber_offsets);
        validate_patch(lc.patch, ls.kappa, sigma_prev_for_layer(spec, k));
        lc.embedding = std::move(embeddings[k]);
        lc.sigma = ls.sigma;
        lc.filter = make_gaussian_filter(*group, ls.sigma);
        net.layers.push_back(std::move(lc));
    }
    return net;
}

Network fit_network(const NetworkSpec& spec, GroupPtr group,
                    const std::vector<FeatureMap>& fit_inputs) {
    validate_spec(spec);
    if (fit_inputs.empty()) throw ShapeError("fit_network: no fit inputs");

    Network net;
    net.group = group;
    net.sigma0 = spec.sigma0;
    if (spec.sigma0 > 0.0) net.input_filter = make_gaussian_filter(*group, spec.sigma0);

    std::vector<FeatureMap> current;
    current.reserve(fit_inputs.size());
    for (const FeatureMap& x : fit_inputs)
        current.push_back(spec.sigma0 > 0.0 ? pool(x, net.input_filter) : x);

    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        const LayerSpec& ls = spec.layers[k];
        LayerConfig lc;
        lc.patch = build_patch_shape(*group, ls.kappa, sigma_prev_for_layer(spec, k),
                                     ls.fiber_offsets);
        validate_patch(lc.patch, ls.kappa, sigma_prev_for_layer(spec, k));
        lc.sigma = ls.sigma;
        lc.filter = make_gaussian_filter(*group, ls.sigma);

        // pass 1: seeded patch sample, one image's patch field in memory at a time
        const int budget = std::max(spec.n_fit_patches, 4 * ls.p);
        const int n_imgs = static_cast<int>(current.size());
        MatrixRM sample;
        int row = 0;
        for (int img = 0; img < n_imgs; ++img) {
            const PatchField pf = extract_patches(current[img], lc.patch);
            if (img == 0) sample.resize(budget, pf.dim);
            const int quota = budget / n_imgs + (img < budget % n_imgs ? 1 : 0);
            Rng rng(derive_seed(ls.seed, 0x9a7c + k, static_cast<std::uint64_t>(img)));
            for (int q = 0; q < quota; ++q, ++row) {
                const std::size_t e = rng.uniform_index(group->size());
                for (int j = 0; j < pf.dim; ++j) sample(row, j) = pf.values[e * pf.dim + j];
            }
        }
        lc.embedding = fit_nystrom(sample, ls.p, ls.kernel, ls.eps, ls.seed);

        // pass 2: push every image through the fitted layer
        std::vector<FeatureMap> next;
        next.reserve(current.size());
        for (const FeatureMap& x : current)
            next.push_back(pool(kernel_map(extract_patches(x, lc.patch), lc.embedding), lc.filter));
        current = std::move(next);
        net.layers.push_back(std::move(lc));
    }
    return net;
}

ForwardTrace forward_trace(const Network& net, const FeatureMap& x0) {
    if (x0.group->kind != net.group->kind || x0.size() != net.group->size())
        throw ShapeError("forward: input lives on a different group");
    ForwardTrace tr;
    tr.input = net.sigma0 > 0.0 ? pool(x0, net.input_filter) : x0;
    const FeatureMap* cur = &tr.input;
    for (const LayerConfig& lc : net.layers) {
        PatchField pf = extract_patches(*cur, lc.patch);
        FeatureMap m = kernel_map(pf, lc.embedding);
        m.layer = static_cast<int>(tr.pre_pool.size()) + 1;
        tr.pre_pool.push_back(std::move(m));
        FeatureMap a = pool(tr.pre_pool.back(), lc.filter);
        a.layer = tr.pre_pool.back().layer;
        tr.post_pool.push_back(std::move(a));
        cur = &tr.post_pool.back();
    }
    tr.post_pool.back().cached_norm = fm_norm(tr.post_pool.back());
    return tr;
}

FeatureMap forward(const Network& net, const FeatureMap& x0) {
    ForwardTrace tr = forward_trace(net, x0);
    return std::move(tr.post_pool.back());
}

double verify_equivariance(const Network& net, const FeatureMap& x, const GroupElement& g) {
    FeatureMap ref = forward(net, x);
    const double nrm = fm_norm(ref);
    if (nrm < 1e-12) throw NumericError("verify_equivariance: |Phi(x)| is degenerate");
    FeatureMap lhs = forward(net, group_translate(x, g, net.fiber_interp));
    FeatureMap rhs = group_translate(ref, g, net.fiber_interp);
    return fm_distance(lhs, rhs) / nrm;
}

void save_network(const Network& net, const NetworkSpec& spec, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("save_network: cannot create '" + dir + "'");

    KeyValueFile kv;
    kv.set("network", "group", group_kind_name(net.group->kind));
    switch (net.group->kind) {
    case GroupKind::SE2:
        kv.set("network", "height", static_cast<std::int64_t>(net.group->height));
        kv.set("network", "width", static_cast<std::int64_t>(net.group->width));
        kv.set("network", "n_theta", static_cast<std::int64_t>(net.group->n_theta));
        break;
    case GroupKind::S2:
        kv.set("network", "n_beta", static_cast<std::int64_t>(net.group->n_beta));
        kv.set("network", "n_phi", static_cast<std::int64_t>(net.group->n_phi));
        break;
    case GroupKind::SO3:
        kv.set("network", "n_alpha", static_cast<std::int64_t>(net.group->n_alpha));
        kv.set("network", "n_beta", static_cast<std::int64_t>(net.group->n_beta));
        kv.set("network", "n_gamma", static_cast<std::int64_t>(net.group->n_gamma));
        break;
    default: break;
    }
    kv.set("network", "n_layers", static_cast<std::int64_t>(net.layers.size()));
    kv.set("network", "sigma0", spec.sigma0);
    kv.set("network", "n_fit_patches", static_cast<std::int64_t>(spec.n_fit_patches));
    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        const LayerSpec& ls = spec.layers[k];
        const std::string sec = "layer" + std::to_string(k + 1);
        kv.set(sec, "kernel", ls.kernel.name());
        kv.set(sec, "alpha", ls.kernel.alpha);
        kv.set(sec, "degree", static_cast<std::int64_t>(ls.kernel.degree));
        kv.set(sec, "offset", ls.kernel.offset);
        kv.set(sec, "p", static_cast<std::int64_t>(ls.p));
        kv.set(sec, "kappa", ls.kappa);
        kv.set(sec, "sigma", ls.sigma);
        kv.set(sec, "eps", ls.eps);
        kv.set_u64(sec, "seed", ls.seed);
        kv.set(sec, "fiber_offsets", ls.fiber_offsets ? "true" : "false");
        const std::string emb_file = sec + ".eckn";
        kv.set(sec, "embedding", emb_file);
        save_embedding(net.layers[k].embedding, (fs::path(dir) / emb_file).string());
    }
    kv.write((fs::path(dir) / "network.manifest").string());
}

std::pair<Network, NetworkSpec> load_network(const std::string& dir, GroupPtr group) {
    namespace fs = std::filesystem;
    const std::string manifest = (fs::path(dir) / "network.manifest").string();
    KeyValueFile kv = KeyValueFile::parse_file(manifest);

    const GroupKind kind = group_kind_from_name(kv.get("network", "group"));
    if (!group) {
        switch (kind) {
        case GroupKind::SE2:
            group = build_group(kind, {static_cast<int>(kv.get_int("network", "height")),
                                       static_cast<int>(kv.get_int("network", "width")),
                                       static_cast<int>(kv.get_int("network", "n_theta"))});
            break;
        case GroupKind::S2:
            group = build_group(kind, {static_cast<int>(kv.get_int("network", "n_beta")),
                                       static_cast<int>(kv.get_int("network", "n_phi"))});
            break;
        case GroupKind::SO3:
            group = build_group(kind, {static_cast<int>(kv.get_int("network", "n_alpha")),
                                       static_cast<int>(kv.get_int("network", "n_beta")),
                                       static_cast<int>(kv.get_int("network", "n_gamma"))});
            break;
        default: throw ConfigError("load_network: unsupported group kind");
        }
    } else if (group->kind != kind) {
        throw ShapeError("load_network: manifest group kind differs from the supplied group");
    }

    NetworkSpec spec;
    spec.sigma0 = kv.get_double("network", "sigma0");
    spec.n_fit_patches = static_cast<int>(kv.get_int_or("network", "n_fit_patches", 1500));
    const int n_layers = static_cast<int>(kv.get_int("network", "n_layers"));
    std::vector<NystromEmbedding> embeddings;
    for (int k = 1; k <= n_layers; ++k) {
        const std::string sec = "layer" + std::to_string(k);
        LayerSpec ls;
        const std::string family = kv.get(sec, "kernel");
        if (family == "exponential") ls.kernel = KernelSpec::exponential();
        else if (family == "rbf") ls.kernel = KernelSpec::rbf(kv.get_double(sec, "alpha"));
        else if (family == "arccos1") ls.kernel = KernelSpec::arccos1();
        else if (family == "polynomial")
            ls.kernel = KernelSpec::polynomial(static_cast<int>(kv.get_int(sec, "degree")),
                                               kv.get_double(sec, "offset"));
        else throw ConfigError("load_network: unknown kernel family '" + family + "'");
        ls.p = static_cast<int>(kv.get_int(sec, "p"));
        ls.kappa = kv.get_double(sec, "kappa");
        ls.sigma = kv.get_double(sec, "sigma");
        ls.eps = kv.get_double(sec, "eps");
        ls.seed = kv.get_u64_or(sec, "seed", 0);
        ls.fiber_offsets = kv.get_bool_or(sec, "fiber_offsets", false);
        spec.layers.push_back(ls);
        embeddings.push_back(load_embedding((fs::path(dir) / kv.get(sec, "embedding")).string()));
    }
    Network net = build_network(spec, group, std::move(embeddings));
    return {std::move(net), std::move(spec)};
}

} // namespace eckn
