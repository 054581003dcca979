#include "eckn/nystrom.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "eckn/error.hpp"
#include "eckn/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "embedding files are written little-endian");

namespace eckn {

namespace {

constexpr double kZeroNorm = 1e-12;
constexpr std::uint32_t kFormatVersion = 1;

// unit-normalized non-zero rows, exact duplicates removed for the
// distinctness count (duplicates keep a single representative)
MatrixRM normalize_and_dedupe(const MatrixRM& patches, std::size_t& n_distinct) {
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(patches.rows());
    for (Eigen::Index i = 0; i < patches.rows(); ++i) {
        const double nrm = patches.row(i).norm();
        if (nrm < kZeroNorm) continue;
        rows.push_back(patches.row(i).transpose() / nrm);
    }
    // count distinct representatives (bitwise equality after normalization)
    std::vector<const Eigen::VectorXd*> distinct;
    for (const auto& r : rows) {
        bool dup = false;
        for (const auto* d : distinct) {
            if (d->size() == r.size() &&
                std::memcmp(d->data(), r.data(), sizeof(double) * r.size()) == 0) {
                dup = true;
                break;
            }
        }
        if (!dup) distinct.push_back(&r);
    }
    n_distinct = distinct.size();
    MatrixRM out(rows.size(), patches.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = rows[i].transpose();
    return out;
}

// k-means++ seeding on the sphere, distance = 1 - <x, z>
std::vector<int> kmeanspp_init(const MatrixRM& pts, int k, Rng& rng) {
    const int n = static_cast<int>(pts.rows());
    std::vector<int> centers;
    centers.push_back(static_cast<int>(rng.uniform_index(n)));
    std::vector<double> dist(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int c : centers) best = std::min(best, 1.0 - pts.row(i).dot(pts.row(c)));
            dist[i] = std::max(best, 0.0);
            total += dist[i];
        }
        int pick = 0;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.uniform_index(n));
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += dist[i];
                pick = i;
                if (acc >= r) break;
            }
        }
        centers.push_back(pick);
    }
    return centers;
}

MatrixRM spherical_kmeans(const MatrixRM& pts, int k, Rng& rng) {
    const int n = static_cast<int>(pts.rows());
    const int dim = static_cast<int>(pts.cols());
    const std::vector<int> init = kmeanspp_init(pts, k, rng);
    MatrixRM centers(k, dim);
    for (int c = 0; c < k; ++c) centers.row(c) = pts.row(init[c]);

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 50; ++iter) {
        // assignment: argmax cosine, ties to the lowest index
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bestdot = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = pts.row(i).dot(centers.row(c));
                if (d > bestdot) {
                    bestdot = d;
                    best = c;
                }
            }
            assign[i] = best;
        }
        // update
        MatrixRM sums = MatrixRM::Zero(k, dim);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[i]) += pts.row(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed from the most isolated point (lowest max-similarity)
                int worst = 0;
                double worstsim = std::numeric_limits<double>::infinity();
                for (int i = 0; i < n; ++i) {
                    double sim = -std::numeric_limits<double>::infinity();
                    for (int cc = 0; cc < k; ++cc)
                        sim = std::max(sim, pts.row(i).dot(centers.row(cc)));
                    if (sim < worstsim) {
                        worstsim = sim;
                        worst = i;
                    }
                }
                centers.row(c) = pts.row(worst);
                continue;
            }
            const double nrm = sums.row(c).norm();
            if (nrm < kZeroNorm) {
                centers.row(c) = pts.row(0);
            } else {
                centers.row(c) = sums.row(c) / nrm;
            }
        }
    }
    // exact unit rows
    for (int c = 0; c < k; ++c) centers.row(c) /= centers.row(c).norm();
    return centers;
}

template <class T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("embedding file truncated");
}

} // namespace

NystromEmbedding fit_nystrom(const MatrixRM& patches, int p, const KernelSpec& spec,
                             double eps, std::uint64_t seed) {
    if (p < 1) throw ShapeError("fit_nystrom: p must be >= 1");
    if (eps <= 0.0) throw ShapeError("fit_nystrom: eps must be positive");

    std::size_t n_distinct = 0;
    const MatrixRM pts = normalize_and_dedupe(patches, n_distinct);
    if (n_distinct < static_cast<std::size_t>(p))
        throw ShapeError("fit_nystrom: only " + std::to_string(n_distinct) +
                         " distinct non-zero patches for p = " + std::to_string(p));

    NystromEmbedding emb;
    emb.kernel = spec;
    emb.eps = eps;
    emb.seed = seed;

    Rng rng(seed);
    emb.anchors = spherical_kmeans(pts, p, rng);

    Eigen::MatrixXd kzz(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            kzz(i, j) = kernel_eval(spec, emb.anchors.row(i).data(), emb.anchors.row(j).data(),
                                    emb.anchors.cols());
    kzz = 0.5 * (kzz + kzz.transpose().eval());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kzz);
    if (eig.info() != Eigen::Success) throw NumericError("fit_nystrom: eigendecomposition failed");
    const Eigen::VectorXd& lam = eig.eigenvalues();
    if (lam.minCoeff() < -1e-8)
        throw NumericError("fit_nystrom: anchor Gram matrix is not numerically PSD (min eig " +
                           std::to_string(lam.minCoeff()) + ")");
    Eigen::VectorXd inv_sqrt(p);
    for (int i = 0; i < p; ++i) inv_sqrt(i) = 1.0 / std::sqrt(std::max(lam(i), 0.0) + eps);
    emb.whitening =
        eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
    return emb;
}

void embed_patch(const NystromEmbedding& emb, const double* patch, double* out) {
    const int p = emb.p();
    const int dim = emb.patch_dim();
    // K(z_i, x); plain loops keep the arithmetic order fixed
    double kvec[512];
    std::vector<double> kbuf;
    double* k = kvec;
    if (p > 512) {
        kbuf.resize(p);
        k = kbuf.data();
    }
    for (int i = 0; i < p; ++i)
        k[i] = kernel_eval(emb.kernel, emb.anchors.row(i).data(), patch, dim);
    for (int i = 0; i < p; ++i) {
        double s = 0.0;
        const double* wrow = emb.whitening.data() + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < p; ++j) s += wrow[j] * k[j];
        out[i] = s;
    }
}

std::vector<double> embed_patch(const NystromEmbedding& emb, const std::vector<double>& patch) {
    if (static_cast<int>(patch.size()) != emb.patch_dim())
        throw ShapeError("embed_patch: patch dimension does not match the anchors");
    std::vector<double> out(emb.p());
    embed_patch(emb, patch.data(), out.data());
    return out;
}

void save_embedding(const NystromEmbedding& emb, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_embedding: cannot open '" + path + "' for writing");
    f.write("ECKN", 4);
    write_pod(f, kFormatVersion);
    write_pod(f, static_cast<std::uint32_t>(emb.p()));
    write_pod(f, static_cast<std::uint32_t>(emb.patch_dim()));
    write_pod(f, static_cast<std::uint32_t>(emb.kernel.family));
    write_pod(f, emb.kernel.alpha);
    write_pod(f, static_cast<std::uint32_t>(emb.kernel.degree));
    write_pod(f, emb.kernel.offset);
    write_pod(f, emb.eps);
    write_pod(f, emb.seed);
    f.write(reinterpret_cast<const char*>(emb.anchors.data()),
            static_cast<std::streamsize>(sizeof(double)) * emb.anchors.size());
    f.write(reinterpret_cast<const char*>(emb.whitening.data()),
            static_cast<std::streamsize>(sizeof(double)) * emb.whitening.size());
    if (!f) throw IoError("save_embedding: write to '" + path + "' failed");
}

NystromEmbedding load_embedding(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_embedding: cannot open '" + path + "'");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "ECKN", 4) != 0)
        throw IoError("load_embedding: '" + path + "' is not an ECKN embedding file");
    std::uint32_t version, p, dim, family, degree;
    read_pod(f, version);
    if (version != kFormatVersion)
        throw IoError("load_embedding: unsupported format version " + std::to_string(version));
    read_pod(f, p);
    read_pod(f, dim);
    read_pod(f, family);
    NystromEmbedding emb;
    read_pod(f, emb.kernel.alpha);
    read_pod(f, degree);
    read_pod(f, emb.kernel.offset);
    read_pod(f, emb.eps);
    read_pod(f, emb.seed);
    if (family > 3) throw IoError("load_embedding: bad kernel family tag");
    emb.kernel.family = static_cast<KernelFamily>(family);
    emb.kernel.degree = static_cast<int>(degree);
    emb.anchors.resize(p, dim);
    emb.whitening.resize(p, p);
    f.read(reinterpret_cast<char*>(emb.anchors.data()),
           static_cast<std::streamsize>(sizeof(double)) * emb.anchors.size());
    f.read(reinterpret_cast<char*>(emb.whitening.data()),
           static_cast<std::streamsize>(sizeof(double)) * emb.whitening.size());
    if (!f) throw IoError("load_embedding: '" + path + "' truncated");
    return emb;
}

} // namespace eckn
