#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "eckn/nystrom.hpp"
#include "eckn/signal.hpp"

namespace eckn {

// Compiled pooling operator: per output element, a convex combination of
// stored values. Rows sum to 1 exactly and a Sinkhorn balancing pass keeps
// Haar-weighted column masses at 1 as well, so the operator norm on the
// weighted L2 space is <= 1 by Schur's test.
struct PoolFilter {
    std::vector<std::size_t> start;    // n+1 offsets into index/coeff
    std::vector<std::uint32_t> index;  // gathered element indices
    std::vector<double> coeff;         // convex coefficients
    double sigma = 0.0;                // Gaussian scale in grid-step units (0 = stencil)
    std::string kind;                  // "gaussian" | "stencil" | "identity"
    // stencil descriptor: lattice offset -> weight (translation grids)
    std::vector<std::pair<std::array<int, 2>, double>> stencil;
};

// Truncated Gaussian filter, truncation radius 3*sigma, sigma in grid-step
// units. SE2 pools within each fiber over toroidal spatial distance; S2 uses
// the geodesic distance; SO3 the rotation angle of u^{-1}v.
PoolFilter make_gaussian_filter(const DiscretizedGroup& group, double sigma);

// Explicit offset stencil on a translation grid (offsets in (dx, dy), weights
// need not be normalized; same weights are applied at every element).
PoolFilter make_stencil_filter(const DiscretizedGroup& group,
                               const std::vector<std::pair<std::array<int, 2>, double>>& offsets);

// Patch field: per group element, the gathered patch vector of dimension
// |S| * channels, entries pre-scaled by sqrt(patch weight) so the Euclidean
// row norm is the patch-space norm.
struct PatchField {
    GroupPtr group;
    int dim = 0;
    int channels = 0;
    std::vector<double> values; // (element, dim)
};

double pf_norm(const PatchField& p);
double pf_distance(const PatchField& a, const PatchField& b);

// P_k: gathers x over the patch shape around every element (offsets rotate
// with the fiber on SE2; coset-section rotation on S2; composition on SO3).
PatchField extract_patches(const FeatureMap& x, const PatchShape& patch);

// M_k: pointwise Nystrom embedding of every patch vector.
FeatureMap kernel_map(const PatchField& patches, const NystromEmbedding& emb);

// A_k via the compiled filter (offset-enumeration form of the pooling sum).
FeatureMap pool(const FeatureMap& x, const PoolFilter& filter);
FeatureMap pool(const FeatureMap& x, double sigma);

// Same operator evaluated through its cross-correlation form: a sum over all
// grid elements v weighted by the filter profile at u^{-1}v, computed through
// the group operations. Agrees with pool() to ~1e-12.
FeatureMap pool_as_cross_correlation(const FeatureMap& x, const PoolFilter& filter);
FeatureMap pool_as_cross_correlation(const FeatureMap& x, double sigma);

// Haar-weighted average per channel; exactly invariant to lattice-exact
// group translations.
std::vector<double> global_pool(const FeatureMap& x);

struct LayerConfig {
    PatchShape patch;
    NystromEmbedding embedding;
    double sigma = 1.0; // pooling scale, grid-step units
    PoolFilter filter;  // compiled at network build
};

struct Network {
    GroupPtr group;
    std::vector<LayerConfig> layers;
    double sigma0 = 0.0;    // input smoothing scale; 0 disables
    PoolFilter input_filter;
    FiberInterp fiber_interp = FiberInterp::Nearest;
};

// Plain parameters for one layer, used by configs and manifests.
struct LayerSpec {
    KernelSpec kernel;
    int p = 8;
    double kappa = 2.0;
    double sigma = 1.0;
    double eps = 1e-6;
    std::uint64_t seed = 0;
    bool fiber_offsets = false;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    double sigma0 = 1.0;
    int n_fit_patches = 1500;
};

// Validates the spec (sigma strictly increasing, patch admissibility) and
// compiles patches/filters; embeddings are fitted layer-wise on patches drawn
// from the supplied images.
Network fit_network(const NetworkSpec& spec, GroupPtr group, const std::vector<FeatureMap>& fit_inputs);

// Assembles a network from already-fitted embeddings (manifest loading).
Network build_network(const NetworkSpec& spec, GroupPtr group,
                      std::vector<NystromEmbedding> embeddings);

struct ForwardTrace {
    FeatureMap input;                // a_0: smoothed input
    std::vector<FeatureMap> pre_pool;  // m_k = M_k P_k a_{k-1}
    std::vector<FeatureMap> post_pool; // a_k = A_k m_k
    const FeatureMap& output() const { return post_pool.back(); }
};

ForwardTrace forward_trace(const Network& net, const FeatureMap& x0);
FeatureMap forward(const Network& net, const FeatureMap& x0);

// Relative equivariance error |Phi(L_g x) - L_g Phi(x)| / |Phi(x)|.
// Throws NumericError when |Phi(x)| < 1e-12.
double verify_equivariance(const Network& net, const FeatureMap& x, const GroupElement& g);

// Network manifest: text key=value sections next to the binary embedding
// files (layer<k>.eckn).
void save_network(const Network& net, const NetworkSpec& spec, const std::string& dir);
std::pair<Network, NetworkSpec> load_network(const std::string& dir, GroupPtr group);

} // namespace eckn
