#include "eckn/verify.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "eckn/rng.hpp"
#include "eckn/stability.hpp"

namespace eckn {

namespace {

void add(std::vector<CheckResult>& out, const std::string& name, bool pass,
         const std::string& detail) {
    out.push_back({name, pass, detail});
}

} // namespace

std::vector<CheckResult> run_verification_suite(const RunConfig& cfg) {
    std::vector<CheckResult> out;
    const std::uint64_t seed = derive_seed(cfg.seed, 0x7e57);

    // group axioms: associativity and inverse on random elements
    {
        Rng rng(seed);
        double worst_assoc = 0.0, worst_inv = 0.0;
        for (int i = 0; i < 100; ++i) {
            auto rand_se2 = [&rng] {
                return GroupElement::se2(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                         rng.uniform(0, 2 * std::numbers::pi));
            };
            auto rand_so3 = [&rng] {
                return GroupElement::so3(rng.uniform(0, 2 * std::numbers::pi),
                                         rng.uniform(0, std::numbers::pi),
                                         rng.uniform(0, 2 * std::numbers::pi));
            };
            for (int variant = 0; variant < 3; ++variant) {
                GroupElement g, h, k;
                if (variant == 0) {
                    g = rand_se2();
                    h = rand_se2();
                    k = rand_se2();
                } else if (variant == 1) {
                    g = rand_so3();
                    h = rand_so3();
                    k = rand_so3();
                } else {
                    g = GroupElement::se3(
                        {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}, rand_so3());
                    h = GroupElement::se3(
                        {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}, rand_so3());
                    k = GroupElement::se3(
                        {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}, rand_so3());
                }
                const GroupElement ab = compose(compose(g, h), k);
                const GroupElement ba = compose(g, compose(h, k));
                worst_assoc = std::max(worst_assoc, ab.approx_equal(ba, 1e-10) ? 0.0 : 1.0);
                const GroupElement gi = compose(g, inverse(g));
                worst_inv =
                    std::max(worst_inv,
                             gi.approx_equal(GroupElement::identity(g.kind()), 1e-12) ? 0.0 : 1.0);
            }
        }
        add(out, "group.associativity", worst_assoc == 0.0, "100 random triples per variant");
        add(out, "group.inverse", worst_inv == 0.0, "g * g^-1 = identity within 1e-12");
    }

    // Haar weights
    {
        GroupPtr g = build_group(cfg.group.kind, cfg.group.dims);
        double total = 0.0;
        bool positive = true;
        for (double w : g->haar_weights) {
            total += w;
            positive = positive && w > 0.0;
        }
        add(out, "group.haar_normalized", std::abs(total - 1.0) <= 1e-12 && positive,
            "sum " + fmt_double(total));
    }

    // kernel axioms on certified families
    {
        const KernelSpec specs[] = {KernelSpec::exponential(), KernelSpec::rbf(0.25),
                                    KernelSpec::arccos1(), KernelSpec::polynomial(1, 0.0)};
        bool all = true;
        std::string detail;
        for (const KernelSpec& spec : specs) {
            const CertReport rep = certify_nonexpansive(spec, 2000, derive_seed(seed, 0xce7));
            if (!rep.pass()) {
                all = false;
                detail += spec.name() + " failed; ";
            }
        }
        add(out, "kernel.certification", all, all ? "4 certified families" : detail);
    }

    // Nystrom landmark consistency
    {
        Rng rng(derive_seed(seed, 0x2b5));
        MatrixRM patches(64, 6);
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 6; ++j) patches(i, j) = rng.normal();
        const NystromEmbedding emb =
            fit_nystrom(patches, 6, KernelSpec::exponential(), 1e-6, derive_seed(seed, 1));
        double worst = 0.0;
        for (int i = 0; i < emb.p(); ++i) {
            std::vector<double> zi(emb.anchors.row(i).data(),
                                   emb.anchors.row(i).data() + emb.patch_dim());
            const std::vector<double> psi = embed_patch(emb, zi);
            for (int j = 0; j < emb.p(); ++j) {
                std::vector<double> zj(emb.anchors.row(j).data(),
                                       emb.anchors.row(j).data() + emb.patch_dim());
                const std::vector<double> psj = embed_patch(emb, zj);
                double dot = 0.0;
                for (int c = 0; c < emb.p(); ++c) dot += psi[c] * psj[c];
                worst = std::max(worst, std::abs(dot - kernel_eval(emb.kernel, zi, zj)));
            }
        }
        add(out, "nystrom.landmark_consistency", worst <= 10.0 * emb.eps,
            "max anchor Gram error " + fmt_double(worst));
    }

    // pooling: operator norm probe and cross-correlation agreement
    {
        GroupPtr g = build_group(cfg.group.kind, cfg.group.dims);
        double worst_ratio = 0.0, worst_cc = 0.0;
        const PoolFilter f = make_gaussian_filter(*g, 2.0);
        for (int i = 0; i < 20; ++i) {
            const FeatureMap x = band_limited_probe(g, 2, derive_seed(seed, 0xab, i));
            worst_ratio = std::max(worst_ratio, fm_norm(pool(x, f)) / fm_norm(x));
            worst_cc = std::max(worst_cc, fm_distance(pool(x, f), pool_as_cross_correlation(x, f)));
        }
        add(out, "pool.schur_norm", worst_ratio <= 1.0 + 1e-10,
            "max |Ax|/|x| = " + fmt_double(worst_ratio));
        add(out, "pool.cross_correlation", worst_cc <= 1e-10,
            "max gap " + fmt_double(worst_cc));
    }

    // lattice equivariance and telescoping on the configured network
    {
        const Dataset ds = build_dataset(cfg);
        GroupPtr g = build_group(cfg.group.kind, cfg.group.dims);
        if (cfg.group.kind == GroupKind::SE2) {
            std::vector<FeatureMap> inputs;
            const std::size_t n_in = std::min<std::size_t>(8, ds.images.size());
            for (std::size_t i = 0; i < n_in; ++i) inputs.push_back(lift(ds.images[i], g));
            Network net = fit_network(cfg.network, g, inputs);

            double worst = verify_equivariance(net, inputs[0], GroupElement::se2(2, 1, 0));
            if (g->n_theta == 1 || g->n_theta == 2 || g->n_theta == 4)
                worst = std::max(worst, verify_equivariance(
                                            net, inputs[0],
                                            GroupElement::se2(0, 0, 2 * std::numbers::pi /
                                                                        g->n_theta)));
            add(out, "network.lattice_equivariance", worst <= 1e-9, fmt_double(worst));

            bool all_pass = true;
            double margin = 0.0;
            for (int t = 0; t < 3; ++t) {
                const DeformationField tau =
                    generate_tau(GroupKind::SE2, g->height, g->width, 2.0, 0.3,
                                 derive_seed(seed, 0x7a0, t));
                const BoundCheck bc =
                    verify_stability_telescoping(net, inputs[t % inputs.size()], tau, 0.5);
                all_pass = all_pass && bc.pass;
                margin = std::max(margin, bc.lhs - bc.rhs);
            }
            add(out, "network.telescoping", all_pass, "max lhs-rhs " + fmt_double(margin));

            // determinism spot check: two forwards, bitwise
            const FeatureMap a = forward(net, inputs[0]);
            const FeatureMap b = forward(net, inputs[0]);
            add(out, "network.deterministic_forward",
                std::memcmp(a.values.data(), b.values.data(),
                            a.values.size() * sizeof(double)) == 0,
                "bitwise repeat");
        }
    }

    return out;
}

} // namespace eckn
