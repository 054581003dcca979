#include "eckn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "eckn/rng.hpp"

namespace eckn {

namespace {

double vec_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// deformation applied to a patch field (a signal with dim channels)
PatchField deform_patch_field(const PatchField& pf, const DeformationField& tau, double alpha) {
    FeatureMap tmp;
    tmp.group = pf.group;
    tmp.channels = pf.dim;
    tmp.values = pf.values;
    FeatureMap moved = apply_deformation(tmp, tau, alpha);
    PatchField out = pf;
    out.values = std::move(moved.values);
    return out;
}

} // namespace

double mean_relative_distance(const Network& net, const FeatureMap& ref,
                              const std::vector<FeatureMap>& pool, bool fiber_avg) {
    FeatureMap phi_ref = forward(net, ref);
    if (fiber_avg) phi_ref = fiber_average(phi_ref);
    const double nrm = fm_norm(phi_ref);
    if (nrm < 1e-12) throw NumericError("mean_relative_distance: |Phi(ref)| is degenerate");
    if (pool.empty()) return 0.0;
    double total = 0.0;
    for (const FeatureMap& x : pool) {
        FeatureMap phi = forward(net, x);
        if (fiber_avg) phi = fiber_average(phi);
        total += fm_distance(phi, phi_ref) / nrm;
    }
    return total / static_cast<double>(pool.size());
}

BoundCheck verify_stability_telescoping(const Network& net, const FeatureMap& x,
                                        const DeformationField& tau, double alpha) {
    BoundCheck bc;
    bc.kind = "telescoping";
    bc.admissible = alpha * tau.grad_sup <= 0.5 + 1e-12;
    bc.params.emplace_back("alpha", alpha);
    bc.params.emplace_back("grad_sup", tau.grad_sup);
    bc.params.emplace_back("sup", tau.sup);

    const ForwardTrace tr = forward_trace(net, x);
    const FeatureMap xd = apply_deformation(x, tau, alpha);
    const ForwardTrace trd = forward_trace(net, xd);
    bc.lhs = fm_distance(trd.output(), tr.output());

    const std::size_t n_layers = net.layers.size();
    double rhs = 0.0;
    for (std::size_t k = 0; k < n_layers; ++k) {
        // m_{k-1} is the raw input for k = 0
        const FeatureMap& m_prev = k == 0 ? x : tr.pre_pool[k - 1];
        const FeatureMap& m_k = tr.pre_pool[k];
        FeatureMap moved = apply_deformation(m_prev, tau, alpha);
        FeatureMap pooled;
        if (k == 0) {
            pooled = net.sigma0 > 0.0 ? pool(moved, net.input_filter) : std::move(moved);
        } else {
            pooled = pool(moved, net.layers[k - 1].filter);
        }
        const FeatureMap through =
            kernel_map(extract_patches(pooled, net.layers[k].patch), net.layers[k].embedding);
        const double dk = fm_distance(through, apply_deformation(m_k, tau, alpha));
        bc.terms.emplace_back("patch_commutator_" + std::to_string(k + 1), dk);
        rhs += dk;

        // bare commutator |[P_k A_{k-1}, L_tau] m_{k-1}|, recorded as a diagnostic
        const PatchField lhs_pf = extract_patches(pooled, net.layers[k].patch);
        FeatureMap pooled_ref;
        if (k == 0) {
            pooled_ref = net.sigma0 > 0.0 ? pool(x, net.input_filter) : x;
        } else {
            pooled_ref = pool(m_prev, net.layers[k - 1].filter);
        }
        const PatchField rhs_pf = deform_patch_field(
            extract_patches(pooled_ref, net.layers[k].patch), tau, alpha);
        bc.terms.emplace_back("bare_commutator_" + std::to_string(k + 1),
                              pf_distance(lhs_pf, rhs_pf));
    }

    const FeatureMap& m_last = tr.pre_pool.back();
    const FeatureMap& a_last = tr.post_pool.back();
    const FeatureMap moved_last = apply_deformation(m_last, tau, alpha);
    const FeatureMap tau_a_last = apply_deformation(a_last, tau, alpha);
    const double e1 = fm_distance(pool(moved_last, net.layers.back().filter), tau_a_last);
    const double e2 = fm_distance(tau_a_last, a_last);
    bc.terms.emplace_back("pool_commutator", e1);
    bc.terms.emplace_back("pool_displacement", e2);
    rhs += e1 + e2;

    bc.rhs = rhs;
    bc.pass = bc.lhs <= bc.rhs + 1e-8;
    return bc;
}

BoundCheck verify_global_invariance(const Network& net, const FeatureMap& x,
                                    const GroupElement& g, const DeformationField& tau,
                                    double alpha) {
    BoundCheck bc;
    bc.kind = "global_invariance";
    bc.admissible = alpha * tau.grad_sup <= 0.5 + 1e-12;
    bc.params.emplace_back("alpha", alpha);

    const FeatureMap phi_tau = forward(net, apply_deformation(x, tau, alpha));
    const FeatureMap phi_g = forward(net, group_translate(x, g, net.fiber_interp));
    bc.lhs = vec_distance(global_pool(phi_tau), global_pool(phi_g));
    bc.rhs = fm_distance(phi_tau, phi_g);
    bc.terms.emplace_back("pooled_gap", bc.lhs);
    bc.terms.emplace_back("representation_gap", bc.rhs);
    bc.pass = bc.lhs <= bc.rhs + 1e-8;
    return bc;
}

double rademacher_bound(const std::vector<double>& gram_diag, double lambda) {
    if (gram_diag.empty()) throw ShapeError("rademacher_bound: M must be >= 1");
    if (lambda <= 0.0) throw ShapeError("rademacher_bound: lambda must be positive");
    double mean = 0.0;
    for (double d : gram_diag) {
        if (d < 0.0) throw ShapeError("rademacher_bound: negative Gram diagonal entry");
        mean += d;
    }
    mean /= static_cast<double>(gram_diag.size());
    return lambda * std::sqrt(mean) / std::sqrt(static_cast<double>(gram_diag.size()));
}

double lipschitz_prediction_gap(double f_norm, double rep_gap) {
    if (f_norm < 0.0 || rep_gap < 0.0)
        throw ShapeError("lipschitz_prediction_gap: arguments must be non-negative");
    return f_norm * rep_gap;
}

double homogeneous_activation_eval(const std::vector<double>& g, const std::vector<double>& x,
                                   Activation act) {
    if (g.size() != x.size()) throw ShapeError("homogeneous_activation_eval: dims differ");
    double nx = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        nx += x[i] * x[i];
        dot += g[i] * x[i];
    }
    nx = std::sqrt(nx);
    if (nx < 1e-12) return 0.0; // zero-extension
    const double u = dot / nx;
    switch (act) {
    case Activation::SmoothedRelu: return nx * 0.5 * (u + std::sqrt(u * u + 1.0));
    case Activation::Exp: return nx * std::exp(u - 1.0);
    }
    return 0.0;
}

namespace {

struct Job {
    std::string panel;
    KernelSpec kernel;
    std::string kernel_label;
    double kappa = 0.0;
    double sigma = 0.0; // last-layer scale
    std::string model; // equivariant | baseline
    std::vector<double> alphas; // alphas this job evaluates
};

NetworkSpec job_network_spec(const RunConfig& cfg, const Job& job, std::uint64_t job_seed) {
    NetworkSpec spec;
    spec.sigma0 = cfg.network.sigma0;
    spec.n_fit_patches = cfg.network.n_fit_patches;
    const std::size_t n = cfg.network.layers.size();
    for (std::size_t k = 0; k < n; ++k) {
        LayerSpec ls = cfg.network.layers[k];
        ls.kernel = job.kernel;
        ls.kappa = job.kappa;
        // last layer pools at job.sigma, earlier layers at halved scales
        ls.sigma = job.sigma * std::pow(2.0, static_cast<double>(k + 1) - static_cast<double>(n));
        ls.seed = derive_seed(job_seed, 0x5eed, k);
        spec.layers.push_back(ls);
    }
    return spec;
}

} // namespace

StabilityReport run_stability_sweep(const RunConfig& cfg, const Dataset& ds, std::uint64_t seed) {
    StabilityReport rep;
    rep.seed = seed;
    rep.config_hash_hex = config_hash(cfg);

    // groups
    GroupPtr group = build_group(cfg.group.kind, cfg.group.dims);
    const int img_h = cfg.dataset.image_size, img_w = cfg.dataset.image_size;
    if (cfg.group.kind == GroupKind::SE2 &&
        (cfg.group.dims[0] != img_h || cfg.group.dims[1] != img_w))
        throw ConfigError("sweep: SE2 grid dims must match dataset image_size");
    GroupPtr flat = build_group(GroupKind::SE2, {img_h, img_w, 1});

    ProtocolSets ps = build_protocol_sets(ds, cfg.sweep.alphas, cfg.sweep.tau,
                                          derive_seed(seed, 0xa11ce), cfg.sweep.rotation_augment,
                                          4, 10, cfg.sweep.mixed_pool);
    const int n_refs = static_cast<int>(ps.references.size());
    const int na = ps.n_alphas();

    const double s2_scale = (std::min(img_h, img_w) - 1) / 2.0;
    auto model_input = [&](const std::string& model, const BaseImage& img) -> FeatureMap {
        if (model == "baseline") return lift(img, flat);
        if (cfg.group.kind == GroupKind::S2) return stereographic_project(img, group, s2_scale);
        return lift(img, group);
    };

    // job list: three panels x two models
    std::vector<Job> jobs;
    const double alpha_one = 1.0;
    for (const std::string& model : {std::string("equivariant"), std::string("baseline")}) {
        for (const std::string& kname : cfg.sweep.alpha_kernels) {
            Job j;
            j.panel = "alpha";
            if (kname == "exponential") j.kernel = KernelSpec::exponential();
            else if (kname == "arccos1") j.kernel = KernelSpec::arccos1();
            else if (kname == "rbf") j.kernel = KernelSpec::rbf_from_bandwidth(cfg.sweep.rbf_bandwidths[0]);
            else if (kname == "polynomial") j.kernel = KernelSpec::polynomial(2, 0.5);
            else throw ConfigError("sweep: unknown alpha-panel kernel '" + kname + "'");
            j.kernel_label = j.kernel.param_name();
            j.kappa = cfg.sweep.default_kappa;
            j.sigma = cfg.sweep.default_sigma;
            j.model = model;
            j.alphas = ps.alphas;
            jobs.push_back(std::move(j));
        }
        for (double bw : cfg.sweep.rbf_bandwidths) {
            for (double kappa : cfg.sweep.kappas) {
                Job j;
                j.panel = "kappa";
                j.kernel = KernelSpec::rbf_from_bandwidth(bw);
                j.kernel_label = j.kernel.param_name();
                j.kappa = kappa;
                j.sigma = cfg.sweep.default_sigma;
                j.model = model;
                j.alphas = {alpha_one};
                jobs.push_back(std::move(j));
            }
            for (double sig : cfg.sweep.sigmas) {
                Job j;
                j.panel = "sigma";
                j.kernel = KernelSpec::rbf_from_bandwidth(bw);
                j.kernel_label = j.kernel.param_name();
                j.kappa = cfg.sweep.default_kappa;
                j.sigma = sig;
                j.model = model;
                j.alphas = {alpha_one};
                jobs.push_back(std::move(j));
            }
        }
    }

    std::int64_t n_forwards = 0;
    bool bounds_done = false;

    for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
        const Job& job = jobs[ji];
        const std::uint64_t job_seed = derive_seed(seed, 0x10b, ji);
        const NetworkSpec spec = job_network_spec(cfg, job, job_seed);
        GroupPtr jg = job.model == "baseline" ? flat : group;

        // fit on the reference inputs
        std::vector<FeatureMap> ref_inputs;
        ref_inputs.reserve(n_refs);
        for (const BaseImage& img : ps.references) ref_inputs.push_back(model_input(job.model, img));
        Network net = fit_network(spec, jg, ref_inputs);

        // representations (fiber-averaged when configured)
        auto represent = [&](const FeatureMap& in) {
            FeatureMap phi = forward(net, in);
            ++n_forwards;
            return cfg.fiber_average ? fiber_average(phi) : std::move(phi);
        };
        std::vector<FeatureMap> ref_reps;
        std::vector<double> ref_norms;
        ref_reps.reserve(n_refs);
        for (const FeatureMap& in : ref_inputs) {
            ref_reps.push_back(represent(in));
            ref_norms.push_back(fm_norm(ref_reps.back()));
        }
        // deformed representations only at the alphas this job evaluates
        std::vector<int> alpha_ids;
        for (double a : job.alphas) {
            int best = 0;
            for (int i = 1; i < na; ++i)
                if (std::abs(ps.alphas[i] - a) < std::abs(ps.alphas[best] - a)) best = i;
            alpha_ids.push_back(best);
        }
        std::vector<std::vector<FeatureMap>> def_reps(na); // [alpha][ref]
        for (int ai : alpha_ids) {
            def_reps[ai].reserve(n_refs);
            for (int r = 0; r < n_refs; ++r)
                def_reps[ai].push_back(represent(model_input(job.model, ps.deformed[r * na + ai])));
        }

        JobRecord rec;
        rec.panel = job.panel;
        rec.kernel = job.kernel_label;
        rec.model = job.model;
        rec.kappa = job.kappa;
        rec.sigma = job.sigma;
        for (int ai : alpha_ids) rec.alphas.push_back(ps.alphas[ai]);
        rec.per_ref_same_class.assign(n_refs, std::vector<double>(alpha_ids.size(), 0.0));
        rec.per_ref_own.assign(n_refs, std::vector<double>(alpha_ids.size(), 0.0));

        for (std::size_t aj = 0; aj < alpha_ids.size(); ++aj) {
            const int ai = alpha_ids[aj];
            double same_total = 0.0, mixed_total = 0.0;
            for (int r = 0; r < n_refs; ++r) {
                const double nrm = std::max(ref_norms[r], 1e-12);
                double same = 0.0;
                int same_n = 0;
                for (int idx : ps.same_class[r]) {
                    if (idx % na != ai) continue;
                    same += fm_distance(def_reps[ai][idx / na], ref_reps[r]) / nrm;
                    ++same_n;
                }
                double mixed = 0.0;
                int mixed_n = 0;
                for (int idx : ps.mixed[r]) {
                    if (idx % na != ai) continue;
                    mixed += fm_distance(def_reps[ai][idx / na], ref_reps[r]) / nrm;
                    ++mixed_n;
                }
                rec.per_ref_same_class[r][aj] = same_n ? same / same_n : 0.0;
                rec.per_ref_own[r][aj] = fm_distance(def_reps[ai][r], ref_reps[r]) / nrm;
                same_total += rec.per_ref_same_class[r][aj];
                mixed_total += mixed_n ? mixed / mixed_n : 0.0;
            }
            SweepCell cell;
            cell.panel = job.panel;
            cell.kernel = job.kernel_label;
            cell.model = job.model;
            cell.alpha = ps.alphas[ai];
            cell.kappa = job.kappa;
            cell.sigma = job.sigma;
            cell.same_class_mrd = same_total / n_refs;
            cell.mixed_mrd = mixed_total / n_refs;
            cell.patch_degenerate = net.layers.front().patch.degenerate;
            rep.cells.push_back(std::move(cell));
        }
        rep.jobs.push_back(std::move(rec));

        // bound checks and probes on the first equivariant network
        if (!bounds_done && job.model == "equivariant") {
            bounds_done = true;
            const DeformationField* taus = ps.taus.data();
            const double alphas_cycle[3] = {0.1, 0.5, 1.0};
            for (int t = 0; t < cfg.sweep.n_bound_triples; ++t) {
                BoundCheck bc = verify_stability_telescoping(
                    net, ref_inputs[t % n_refs], taus[t % n_refs], alphas_cycle[t % 3]);
                bc.params.emplace_back("triple", t);
                rep.bounds.push_back(std::move(bc));
            }
            if (jg->kind == GroupKind::SE2) {
                const GroupElement g = GroupElement::se2(1.0, 0.0, 0.0);
                for (int t = 0; t < 2; ++t) {
                    BoundCheck bc = verify_global_invariance(net, ref_inputs[t], g, taus[t],
                                                             alphas_cycle[t % 3]);
                    bc.params.emplace_back("triple", t);
                    rep.bounds.push_back(std::move(bc));
                }
                rep.probes.emplace_back("equivariance_translation",
                                        verify_equivariance(net, ref_inputs[0], g));
                if (jg->n_theta == 1 || jg->n_theta == 2 || jg->n_theta == 4) {
                    rep.probes.emplace_back(
                        "equivariance_rotation",
                        verify_equivariance(net, ref_inputs[0],
                                            GroupElement::se2(0.0, 0.0, 2.0 * std::numbers::pi /
                                                                            jg->n_theta)));
                }
            }
            double worst_pool = 0.0;
            for (int i = 0; i < 30; ++i) {
                const FeatureMap probe = band_limited_probe(jg, 1, derive_seed(seed, 0x900b, i));
                worst_pool = std::max(worst_pool,
                                      fm_norm(pool(probe, net.layers.back().filter)) / fm_norm(probe));
            }
            rep.probes.emplace_back("pool_norm_probe", worst_pool);
        }
    }

    rep.runtime.emplace_back("n_jobs", static_cast<std::int64_t>(jobs.size()));
    rep.runtime.emplace_back("n_forwards", n_forwards);
    rep.runtime.emplace_back("n_references", n_refs);
    rep.runtime.emplace_back("n_deformed", static_cast<std::int64_t>(ps.deformed.size()));
    return rep;
}

namespace {

nlohmann::json bound_to_json(const BoundCheck& bc) {
    nlohmann::json j;
    j["kind"] = bc.kind;
    j["lhs"] = bc.lhs;
    j["rhs"] = bc.rhs;
    j["pass"] = bc.pass;
    j["admissible"] = bc.admissible;
    nlohmann::json terms;
    for (const auto& [k, v] : bc.terms) terms[k] = v;
    j["terms"] = terms;
    nlohmann::json params;
    for (const auto& [k, v] : bc.params) params[k] = v;
    j["params"] = params;
    return j;
}

BoundCheck bound_from_json(const nlohmann::json& j) {
    BoundCheck bc;
    bc.kind = j.at("kind").get<std::string>();
    bc.lhs = j.at("lhs").get<double>();
    bc.rhs = j.at("rhs").get<double>();
    bc.pass = j.at("pass").get<bool>();
    bc.admissible = j.at("admissible").get<bool>();
    for (const auto& [k, v] : j.at("terms").items()) bc.terms.emplace_back(k, v.get<double>());
    for (const auto& [k, v] : j.at("params").items()) bc.params.emplace_back(k, v.get<double>());
    return bc;
}

} // namespace

nlohmann::json report_to_json(const StabilityReport& rep) {
    nlohmann::json j;
    j["config_hash"] = rep.config_hash_hex;
    j["seed"] = rep.seed;
    j["cells"] = nlohmann::json::array();
    for (const SweepCell& c : rep.cells) {
        nlohmann::json cj;
        cj["panel"] = c.panel;
        cj["kernel"] = c.kernel;
        cj["model"] = c.model;
        cj["alpha"] = c.alpha;
        cj["kappa"] = c.kappa;
        cj["sigma"] = c.sigma;
        cj["same_class_mrd"] = c.same_class_mrd;
        cj["mixed_mrd"] = c.mixed_mrd;
        cj["patch_degenerate"] = c.patch_degenerate;
        j["cells"].push_back(std::move(cj));
    }
    j["jobs"] = nlohmann::json::array();
    for (const JobRecord& r : rep.jobs) {
        nlohmann::json rj;
        rj["panel"] = r.panel;
        rj["kernel"] = r.kernel;
        rj["model"] = r.model;
        rj["kappa"] = r.kappa;
        rj["sigma"] = r.sigma;
        rj["alphas"] = r.alphas;
        rj["per_ref_same_class"] = r.per_ref_same_class;
        rj["per_ref_own"] = r.per_ref_own;
        j["jobs"].push_back(std::move(rj));
    }
    j["bounds"] = nlohmann::json::array();
    for (const BoundCheck& bc : rep.bounds) j["bounds"].push_back(bound_to_json(bc));
    nlohmann::json probes;
    for (const auto& [k, v] : rep.probes) probes[k] = v;
    j["probes"] = probes;
    nlohmann::json runtime;
    for (const auto& [k, v] : rep.runtime) runtime[k] = v;
    j["runtime"] = runtime;
    return j;
}

StabilityReport report_from_json(const nlohmann::json& j) {
    StabilityReport rep;
    rep.config_hash_hex = j.at("config_hash").get<std::string>();
    rep.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& cj : j.at("cells")) {
        SweepCell c;
        c.panel = cj.at("panel").get<std::string>();
        c.kernel = cj.at("kernel").get<std::string>();
        c.model = cj.at("model").get<std::string>();
        c.alpha = cj.at("alpha").get<double>();
        c.kappa = cj.at("kappa").get<double>();
        c.sigma = cj.at("sigma").get<double>();
        c.same_class_mrd = cj.at("same_class_mrd").get<double>();
        c.mixed_mrd = cj.at("mixed_mrd").get<double>();
        c.patch_degenerate = cj.at("patch_degenerate").get<bool>();
        rep.cells.push_back(std::move(c));
    }
    for (const auto& rj : j.at("jobs")) {
        JobRecord r;
        r.panel = rj.at("panel").get<std::string>();
        r.kernel = rj.at("kernel").get<std::string>();
        r.model = rj.at("model").get<std::string>();
        r.kappa = rj.at("kappa").get<double>();
        r.sigma = rj.at("sigma").get<double>();
        r.alphas = rj.at("alphas").get<std::vector<double>>();
        r.per_ref_same_class = rj.at("per_ref_same_class").get<std::vector<std::vector<double>>>();
        r.per_ref_own = rj.at("per_ref_own").get<std::vector<std::vector<double>>>();
        rep.jobs.push_back(std::move(r));
    }
    for (const auto& bj : j.at("bounds")) rep.bounds.push_back(bound_from_json(bj));
    for (const auto& [k, v] : j.at("probes").items()) rep.probes.emplace_back(k, v.get<double>());
    for (const auto& [k, v] : j.at("runtime").items())
        rep.runtime.emplace_back(k, v.get<std::int64_t>());
    return rep;
}

std::string distances_csv(const StabilityReport& rep) {
    std::string csv = "alpha,kappa,sigma,kernel,model,same_class_mrd,mixed_mrd\n";
    for (const SweepCell& c : rep.cells) {
        csv += fmt_double(c.alpha) + "," + fmt_double(c.kappa) + "," + fmt_double(c.sigma) + "," +
               c.kernel + "," + c.model + "," + fmt_double(c.same_class_mrd) + "," +
               fmt_double(c.mixed_mrd) + "\n";
    }
    return csv;
}

std::vector<std::string> write_plotdata(const StabilityReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "plotdata", ec);
    if (ec) throw IoError("write_plotdata: cannot create '" + dir + "/plotdata'");

    // one file per (panel, model, kernel), rows sorted by axis value
    std::vector<std::string> paths;
    std::vector<std::string> seen;
    for (const SweepCell& c : rep.cells) {
        const std::string tag = c.panel + "_" + c.model + "_" + c.kernel;
        if (std::find(seen.begin(), seen.end(), tag) != seen.end()) continue;
        seen.push_back(tag);
        std::vector<const SweepCell*> rows;
        for (const SweepCell& c2 : rep.cells)
            if (c2.panel == c.panel && c2.model == c.model && c2.kernel == c.kernel)
                rows.push_back(&c2);
        auto axis = [&](const SweepCell& cc) {
            if (c.panel == "alpha") return cc.alpha;
            if (c.panel == "kappa") return cc.kappa;
            return cc.sigma;
        };
        std::stable_sort(rows.begin(), rows.end(),
                         [&](const SweepCell* a, const SweepCell* b) { return axis(*a) < axis(*b); });
        const std::string path = (fs::path(dir) / "plotdata" / (tag + ".csv")).string();
        std::ofstream f(path);
        if (!f) throw IoError("write_plotdata: cannot open '" + path + "'");
        f << "# " << c.panel << ",same_class_mrd,mixed_mrd\n";
        for (const SweepCell* r : rows)
            f << fmt_double(axis(*r)) << "," << fmt_double(r->same_class_mrd) << ","
              << fmt_double(r->mixed_mrd) << "\n";
        paths.push_back(path);
    }
    return paths;
}

std::vector<std::string> write_reports(const StabilityReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("write_reports: cannot create '" + dir + "'");

    std::vector<std::string> paths;
    {
        const std::string path = (fs::path(dir) / "report.json").string();
        std::ofstream f(path);
        if (!f) throw IoError("write_reports: cannot open '" + path + "'");
        f << report_to_json(rep).dump(2) << "\n";
        paths.push_back(path);
    }
    {
        const std::string path = (fs::path(dir) / "distances.csv").string();
        std::ofstream f(path);
        if (!f) throw IoError("write_reports: cannot open '" + path + "'");
        f << distances_csv(rep);
        paths.push_back(path);
    }
    {
        const std::string path = (fs::path(dir) / "bounds.jsonl").string();
        std::ofstream f(path);
        if (!f) throw IoError("write_reports: cannot open '" + path + "'");
        for (const BoundCheck& bc : rep.bounds) f << bound_to_json(bc).dump() << "\n";
        paths.push_back(path);
    }
    for (std::string& p : write_plotdata(rep, dir)) paths.push_back(std::move(p));
    {
        const std::string path = (fs::path(dir) / "manifest.txt").string();
        KeyValueFile kv;
        kv.set("report", "config_hash", rep.config_hash_hex);
        kv.set_u64("report", "seed", rep.seed);
        kv.set("report", "n_cells", static_cast<std::int64_t>(rep.cells.size()));
        std::string files;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            if (i) files += ",";
            files += fs::path(paths[i]).lexically_relative(dir).string();
        }
        kv.set("report", "files", files);
        kv.write(path);
        paths.push_back(path);
    }
    return paths;
}

} // namespace eckn
