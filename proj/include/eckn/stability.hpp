#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eckn/data.hpp"
#include "eckn/deformation.hpp"
#include "eckn/network.hpp"

namespace eckn {

// One asserted inequality with its per-term breakdown; serialized append-only
// into bounds.jsonl.
struct BoundCheck {
    std::string kind;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    bool admissible = true;
    std::vector<std::pair<std::string, double>> terms;
    std::vector<std::pair<std::string, double>> params;
};

// (1/|S|) sum |Phi(x') - Phi(x)| / |Phi(x)|. Throws NumericError when the
// reference representation is degenerate.
double mean_relative_distance(const Network& net, const FeatureMap& ref,
                              const std::vector<FeatureMap>& pool, bool fiber_avg = false);

// Per-signal telescoping of the deformation gap: the left side
// |Phi(L_at x) - Phi(x)| against the sum of per-layer patch-commutator terms
// (evaluated through the layer's kernel map), the final pooling commutator
// and the final pooling displacement. Holds by construction through
// non-expansive layers.
BoundCheck verify_stability_telescoping(const Network& net, const FeatureMap& x,
                                        const DeformationField& tau, double alpha);

// |gp(Phi(L_tau x)) - gp(Phi(L_g x))| <= |Phi(L_tau x) - Phi(L_g x)|, the
// global-pooling contraction chain.
BoundCheck verify_global_invariance(const Network& net, const FeatureMap& x,
                                    const GroupElement& g, const DeformationField& tau,
                                    double alpha);

// lambda * sqrt(mean(diag)) / sqrt(M)
double rademacher_bound(const std::vector<double>& gram_diag, double lambda);

// |f(L_tau x) - f(x)| <= |f| * |Phi(L_tau x) - Phi(x)|: the right side.
double lipschitz_prediction_gap(double f_norm, double rep_gap);

enum class Activation { SmoothedRelu, Exp };

// f(x) = |x| * act(<g, x>/|x|), zero-extended at x = 0. SmoothedRelu is
// act(u) = (u + sqrt(u^2 + 1))/2, Exp is act(u) = exp(u - 1).
double homogeneous_activation_eval(const std::vector<double>& g, const std::vector<double>& x,
                                   Activation act);

struct SweepCell {
    std::string panel;  // alpha | kappa | sigma
    std::string kernel; // parametrized kernel label
    std::string model;  // equivariant | baseline
    double alpha = 0.0, kappa = 0.0, sigma = 0.0;
    double same_class_mrd = 0.0, mixed_mrd = 0.0;
    bool patch_degenerate = false;
};

// Per-network record: relative-distance curves per reference over the alphas
// the job evaluated.
struct JobRecord {
    std::string panel, kernel, model;
    double kappa = 0.0, sigma = 0.0;
    std::vector<double> alphas;
    std::vector<std::vector<double>> per_ref_same_class; // [ref][alpha]
    std::vector<std::vector<double>> per_ref_own;        // [ref][alpha]
};

struct StabilityReport {
    std::string config_hash_hex;
    std::uint64_t seed = 0;
    std::vector<SweepCell> cells;
    std::vector<JobRecord> jobs;
    std::vector<BoundCheck> bounds;
    std::vector<std::pair<std::string, double>> probes;
    // deterministic work counters; wall-clock time is deliberately excluded
    // so equal configs produce byte-identical bundles
    std::vector<std::pair<std::string, std::int64_t>> runtime;
};

// The full deformation-stability protocol: three panel sweeps (alpha, kappa,
// last-layer sigma) for the equivariant model and the translation-only
// baseline, plus bound checks and probe records. Deterministic per seed.
StabilityReport run_stability_sweep(const RunConfig& cfg, const Dataset& ds, std::uint64_t seed);

nlohmann::json report_to_json(const StabilityReport& rep);
StabilityReport report_from_json(const nlohmann::json& j);

// Emits report.json, distances.csv, bounds.jsonl, plotdata/*.csv and a
// manifest with the config hash. Returns the written paths.
std::vector<std::string> write_reports(const StabilityReport& rep, const std::string& dir);

// plotdata writers shared by `sweep` and `report` so regenerated CSVs are
// byte-identical.
std::vector<std::string> write_plotdata(const StabilityReport& rep, const std::string& dir);
std::string distances_csv(const StabilityReport& rep);

} // namespace eckn
