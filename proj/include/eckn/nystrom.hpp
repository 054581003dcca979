#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "eckn/kernel.hpp"

namespace eckn {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Finite-dimensional kernel map: psi(x) = W * [K(z_i, x)]_i with unit-norm
// anchor rows Z and whitening W = (K_ZZ + eps*I)^{-1/2}. The embedding is
// non-expansive whenever the kernel profile is, and <psi(x), psi(y)>
// approaches K(x, y) on anchors as eps -> 0.
struct NystromEmbedding {
    MatrixRM anchors;   // p x patch_dim, rows unit-norm
    MatrixRM whitening; // p x p, symmetric positive definite
    KernelSpec kernel;
    double eps = 1e-6;
    std::uint64_t seed = 0;

    int p() const { return static_cast<int>(anchors.rows()); }
    int patch_dim() const { return static_cast<int>(anchors.cols()); }
};

// Unsupervised anchor selection: spherical k-means (cosine objective) on the
// unit-normalized non-zero patches, k-means++ init, 50 Lloyd iterations,
// deterministic per seed. Whitening by symmetric eigendecomposition.
//
// Throws ShapeError when fewer than p distinct non-zero patches are supplied
// and NumericError when the anchor Gram matrix is not numerically PSD.
NystromEmbedding fit_nystrom(const MatrixRM& patches, int p, const KernelSpec& spec, double eps,
                             std::uint64_t seed);

// psi(x); out must hold p doubles. Zero patches map to the zero vector.
void embed_patch(const NystromEmbedding& emb, const double* patch, double* out);
std::vector<double> embed_patch(const NystromEmbedding& emb, const std::vector<double>& patch);

// Versioned little-endian binary format: magic "ECKN", version, dims, kernel
// tag + parameters, seed, then Z and W as row-major 64-bit reals.
void save_embedding(const NystromEmbedding& emb, const std::string& path);
NystromEmbedding load_embedding(const std::string& path);

} // namespace eckn
