#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eckn/deformation.hpp"
#include "eckn/keyvalue.hpp"
#include "eckn/network.hpp"
#include "eckn/signal.hpp"

namespace eckn {

struct Dataset {
    std::vector<BaseImage> images;
    std::vector<int> labels; // [0, 9] for MNIST-style sets
    std::string provenance;
    std::string split;
};

// IDX (MNIST container) reader/writer: big-endian magic 0x803 for images,
// 0x801 for labels; pixels normalized to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

// Rotates each image by an independent uniform angle in [0, 2*pi), bilinear
// resampling about the center with zero padding. Deterministic per seed.
Dataset make_rotated(const Dataset& ds, std::uint64_t seed);
BaseImage rotate_image(const BaseImage& img, double angle);

// Synthetic fallback: class c is a smoothed oriented bar at angle c*pi/10
// with seeded per-sample jitter. Ten classes.
Dataset make_synthetic(int n_per_class, int dims, std::uint64_t seed);

struct TauParams {
    double smoothness = 3.0;
    double target_grad = 0.4;
};

// The deformation protocol sets: 4 references per class for 10 classes, one
// deformation field per reference, one deformed copy per (reference, alpha).
struct ProtocolSets {
    std::vector<BaseImage> references; // 40
    std::vector<int> reference_labels;
    std::vector<double> alphas;              // the alpha axis
    std::vector<BaseImage> deformed;         // index = ref*|alphas| + a
    std::vector<DeformationField> taus;      // per reference
    std::vector<double> augment_angles;      // per reference (0 when disabled)
    std::vector<std::vector<int>> same_class; // per ref: deformed indices, same label
    std::vector<std::vector<int>> mixed;      // per ref: sampled deformed indices
    std::uint64_t seed = 0;

    int n_alphas() const { return static_cast<int>(alphas.size()); }
};

// rotation_augment rotates every deformed copy of a reference by one
// seeded angle per reference. Mixed pools are drawn without replacement,
// stratified over alpha so every per-alpha cell stays populated.
ProtocolSets build_protocol_sets(const Dataset& ds, const std::vector<double>& alphas,
                                 const TauParams& tau_params, std::uint64_t seed,
                                 bool rotation_augment = false, int refs_per_class = 4,
                                 int n_classes = 10, int mixed_pool = 50);

struct GroupConfig {
    GroupKind kind = GroupKind::SE2;
    std::vector<int> dims; // per build_group
};

struct DatasetConfig {
    std::string source = "synthetic"; // synthetic | idx
    int n_per_class = 6;
    int image_size = 16;
    bool rotate = true;
    std::string images_path, labels_path;
};

struct SweepConfig {
    std::vector<double> alphas{0.1, 0.5, 1.0, 2.5, 5.0};
    std::vector<double> kappas{2.0, 5.0, 8.0, 10.0};
    std::vector<double> sigmas{1.0, 3.0, 5.0, 10.0};
    std::vector<double> rbf_bandwidths{5.0, 10.0};
    std::vector<std::string> alpha_kernels{"exponential", "arccos1"};
    double default_kappa = 2.0;
    double default_sigma = 2.0;
    TauParams tau;
    bool rotation_augment = false;
    int mixed_pool = 50;
    int n_bound_triples = 4;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    int threads = 0;
    GroupConfig group;
    DatasetConfig dataset;
    NetworkSpec network;
    SweepConfig sweep;
    bool fiber_average = true;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_string(const std::string& text, const std::string& origin = "<string>");

// Canonical serialization (stable key order) and its FNV fingerprint.
KeyValueFile config_to_keyvalue(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Builds the configured dataset (applies rotation when requested); IDX paths
// resolve against ECKN_DATA_DIR when set and not found directly.
Dataset build_dataset(const RunConfig& cfg);

} // namespace eckn
