#include "eckn/reference.hpp"

#include <cmath>

namespace eckn::ref {

PatchField extract_patches(const FeatureMap& x, const PatchShape& patch) {
    const DiscretizedGroup& g = *x.group;
    const int ch = x.channels;
    const int ns = static_cast<int>(patch.size());
    PatchField out;
    out.group = x.group;
    out.channels = ch;
    out.dim = ns * ch;
    out.values.resize(g.size() * out.dim);
    for (std::size_t e = 0; e < g.size(); ++e) {
        double* row = out.values.data() + e * out.dim;
        for (int k = 0; k < ns; ++k) {
            const GroupElement q = compose(g.elements[e], patch.offsets[k]);
            const std::vector<double> v = sample_interpolated(x, q);
            const double sw = std::sqrt(patch.weights[k]);
            for (int c = 0; c < ch; ++c) row[k * ch + c] = sw * v[c];
        }
    }
    return out;
}

FeatureMap kernel_map(const PatchField& patches, const NystromEmbedding& emb) {
    if (patches.dim != emb.patch_dim())
        throw ShapeError("ref::kernel_map: patch dimension does not match the embedding");
    FeatureMap out;
    out.group = patches.group;
    out.channels = emb.p();
    out.values.resize(patches.group->size() * emb.p());
    for (std::size_t e = 0; e < patches.group->size(); ++e) {
        embed_patch(emb, patches.values.data() + e * patches.dim,
                    out.values.data() + e * out.channels);
    }
    return out;
}

FeatureMap pool(const FeatureMap& x, const PoolFilter& f) {
    FeatureMap out;
    out.group = x.group;
    out.channels = x.channels;
    out.layer = x.layer;
    out.values.assign(x.values.size(), 0.0);
    const int ch = x.channels;
    for (std::size_t u = 0; u < x.size(); ++u) {
        double* o = out.values.data() + u * ch;
        for (std::size_t j = f.start[u]; j < f.start[u + 1]; ++j) {
            const double w = f.coeff[j];
            const double* src = x.values.data() + static_cast<std::size_t>(f.index[j]) * ch;
            for (int c = 0; c < ch; ++c) o[c] += w * src[c];
        }
    }
    return out;
}

FeatureMap apply_deformation(const FeatureMap& x, const DeformationField& tau, double alpha) {
    if (alpha == 0.0) return x;
    const DiscretizedGroup& g = *x.group;
    FeatureMap out;
    out.group = x.group;
    out.channels = x.channels;
    out.layer = x.layer;
    out.values.resize(x.values.size());
    for (std::size_t e = 0; e < g.size(); ++e) {
        switch (g.kind) {
        case GroupKind::SE2: {
            const Se2& u = g.elements[e].as_se2();
            const int col = static_cast<int>(u.tx), row = static_cast<int>(u.ty);
            const GroupElement q = GroupElement::se2(u.tx - alpha * tau.du(row, col),
                                                     u.ty - alpha * tau.dv(row, col), u.theta);
            const std::vector<double> v = sample_interpolated(x, q);
            for (int c = 0; c < x.channels; ++c) out.values[e * x.channels + c] = v[c];
            break;
        }
        case GroupKind::S2: {
            // raw chart coordinates, bypassing the S2Point pole canonicalization
            const S2Point& p = g.elements[e].as_s2();
            const int row = static_cast<int>(e) / g.n_phi;
            const int col = static_cast<int>(e) % g.n_phi;
            detail::sample_s2(g, x.values.data(), x.channels, p.beta - alpha * tau.du(row, col),
                              p.phi - alpha * tau.dv(row, col),
                              out.values.data() + e * x.channels);
            break;
        }
        default:
            throw ShapeError("ref::apply_deformation: unsupported group kind");
        }
    }
    return out;
}

} // namespace eckn::ref
