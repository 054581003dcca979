#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "eckn/nystrom.hpp"
#include "eckn/rng.hpp"

using namespace eckn;

namespace {

MatrixRM random_patches(int n, int dim, std::uint64_t seed) {
    MatrixRM m(n, dim);
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = rng.normal();
    return m;
}

} // namespace

TEST_CASE("fit_nystrom p=1: single repeated patch") {
    MatrixRM patches(6, 3);
    for (int i = 0; i < 6; ++i) {
        patches(i, 0) = 3.0;
        patches(i, 1) = 0.0;
        patches(i, 2) = 4.0;
    }
    const double eps = 1e-6;
    const NystromEmbedding emb = fit_nystrom(patches, 1, KernelSpec::exponential(), eps, 1);
    // anchor = v / |v|
    CHECK(emb.anchors(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(emb.anchors(0, 2) == doctest::Approx(0.8).epsilon(1e-12));
    // K_ZZ = [1], so W = 1/sqrt(1 + eps)
    CHECK(emb.whitening(0, 0) == doctest::Approx(1.0 / std::sqrt(1.0 + eps)).epsilon(1e-12));
    // psi(x) = K(z, x)/sqrt(1+eps)
    const std::vector<double> x{1.0, 2.0, 2.0};
    const double expect =
        kernel_eval(emb.kernel, std::vector<double>{0.6, 0.0, 0.8}, x) / std::sqrt(1.0 + eps);
    CHECK(embed_patch(emb, x)[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fit_nystrom p=2 on two orthogonal clusters: whitening oracle") {
    // patches concentrated on e1 and e2; anchors become those axes and
    // K_ZZ = [[1, k0], [k0, 1]] with k0 = exp(-1)
    MatrixRM patches(8, 2);
    for (int i = 0; i < 8; ++i) {
        patches(i, 0) = i % 2 == 0 ? 2.0 : 0.0;
        patches(i, 1) = i % 2 == 0 ? 0.0 : 3.0;
    }
    const double eps = 1e-6;
    const NystromEmbedding emb = fit_nystrom(patches, 2, KernelSpec::exponential(), eps, 5);
    // 2x2 eigendecomposition by hand: eigenvalues 1 +- k0 on (1,1)/(1,-1)
    const double k0 = std::exp(-1.0);
    const double wp = 1.0 / std::sqrt(1.0 + k0 + eps);
    const double wm = 1.0 / std::sqrt(1.0 - k0 + eps);
    const double diag = 0.5 * (wp + wm), off = 0.5 * (wp - wm);
    CHECK(emb.whitening(0, 0) == doctest::Approx(diag).epsilon(1e-10));
    CHECK(emb.whitening(1, 1) == doctest::Approx(diag).epsilon(1e-10));
    CHECK(emb.whitening(0, 1) == doctest::Approx(off).epsilon(1e-10));
    // W (K + eps I) W = I
    Eigen::MatrixXd kzz(2, 2);
    kzz << 1.0, k0, k0, 1.0;
    const Eigen::MatrixXd probe =
        emb.whitening * (kzz + eps * Eigen::MatrixXd::Identity(2, 2)) * emb.whitening;
    CHECK((probe - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fit_nystrom determinism: same seed gives bitwise-identical anchors") {
    const MatrixRM patches = random_patches(64, 5, 7);
    const NystromEmbedding a = fit_nystrom(patches, 4, KernelSpec::exponential(), 1e-6, 99);
    const NystromEmbedding b = fit_nystrom(patches, 4, KernelSpec::exponential(), 1e-6, 99);
    CHECK(std::memcmp(a.anchors.data(), b.anchors.data(),
                      sizeof(double) * a.anchors.size()) == 0);
    CHECK(std::memcmp(a.whitening.data(), b.whitening.data(),
                      sizeof(double) * a.whitening.size()) == 0);
}

TEST_CASE("fit_nystrom errors: too few distinct patches, bad arguments") {
    MatrixRM patches(5, 3);
    for (int i = 0; i < 5; ++i) {
        patches(i, 0) = 1.0;
        patches(i, 1) = 1.0;
        patches(i, 2) = 0.0;
    }
    CHECK_THROWS_AS(fit_nystrom(patches, 2, KernelSpec::exponential(), 1e-6, 1), ShapeError);
    CHECK_THROWS_AS(fit_nystrom(patches, 0, KernelSpec::exponential(), 1e-6, 1), ShapeError);
    CHECK_THROWS_AS(fit_nystrom(patches, 1, KernelSpec::exponential(), 0.0, 1), ShapeError);
    // zero patches never count
    MatrixRM zeros = MatrixRM::Zero(4, 3);
    CHECK_THROWS_AS(fit_nystrom(zeros, 1, KernelSpec::exponential(), 1e-6, 1), ShapeError);
}

TEST_CASE("anchors are unit rows; whitening is symmetric and whitens K_ZZ") {
    const MatrixRM patches = random_patches(128, 6, 11);
    const double eps = 1e-6;
    const NystromEmbedding emb = fit_nystrom(patches, 8, KernelSpec::rbf(0.25), eps, 3);
    for (int i = 0; i < emb.p(); ++i)
        CHECK(emb.anchors.row(i).norm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((emb.whitening - emb.whitening.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::MatrixXd kzz(emb.p(), emb.p());
    for (int i = 0; i < emb.p(); ++i)
        for (int j = 0; j < emb.p(); ++j)
            kzz(i, j) = kernel_eval(emb.kernel, emb.anchors.row(i).data(),
                                    emb.anchors.row(j).data(), emb.patch_dim());
    const Eigen::MatrixXd probe =
        emb.whitening * (kzz + eps * Eigen::MatrixXd::Identity(emb.p(), emb.p())) * emb.whitening;
    CHECK((probe - Eigen::MatrixXd::Identity(emb.p(), emb.p())).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("embed_patch: zero patch maps to zero; anchor norms near 1 at tiny eps") {
    const MatrixRM patches = random_patches(64, 4, 13);
    const NystromEmbedding emb = fit_nystrom(patches, 6, KernelSpec::exponential(), 1e-8, 5);
    const std::vector<double> zero(4, 0.0);
    for (double v : embed_patch(emb, zero)) CHECK(v == 0.0);
    for (int i = 0; i < emb.p(); ++i) {
        std::vector<double> z(emb.anchors.row(i).data(), emb.anchors.row(i).data() + 4);
        const std::vector<double> psi = embed_patch(emb, z);
        double n2 = 0.0;
        for (double v : psi) n2 += v * v;
        CHECK(std::abs(n2 - 1.0) <= 1e-6);
    }
    CHECK_THROWS_AS(embed_patch(emb, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST_CASE("nystrom consistency: embedded Gram approaches K as eps shrinks") {
    const MatrixRM patches = random_patches(96, 5, 17);
    for (double eps : {1e-4, 1e-6}) {
        const NystromEmbedding emb = fit_nystrom(patches, 6, KernelSpec::exponential(), eps, 7);
        double worst = 0.0;
        for (int i = 0; i < emb.p(); ++i) {
            std::vector<double> zi(emb.anchors.row(i).data(), emb.anchors.row(i).data() + 5);
            const std::vector<double> pi = embed_patch(emb, zi);
            for (int j = 0; j < emb.p(); ++j) {
                std::vector<double> zj(emb.anchors.row(j).data(), emb.anchors.row(j).data() + 5);
                const std::vector<double> pj = embed_patch(emb, zj);
                double dot = 0.0;
                for (int c = 0; c < emb.p(); ++c) dot += pi[c] * pj[c];
                worst = std::max(worst, std::abs(dot - kernel_eval(emb.kernel, zi, zj)));
            }
        }
        CHECK(worst <= 10.0 * eps);
    }
}

TEST_CASE("embedded non-expansiveness for a certified kernel") {
    const MatrixRM patches = random_patches(96, 5, 19);
    const NystromEmbedding emb = fit_nystrom(patches, 8, KernelSpec::exponential(), 1e-6, 9);
    Rng rng(21);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> x(5), y(5);
        double d2 = 0.0;
        for (int j = 0; j < 5; ++j) {
            x[j] = rng.normal();
            y[j] = rng.normal();
            d2 += (x[j] - y[j]) * (x[j] - y[j]);
        }
        const std::vector<double> px = embed_patch(emb, x), py = embed_patch(emb, y);
        double e2 = 0.0;
        for (int c = 0; c < emb.p(); ++c) e2 += (px[c] - py[c]) * (px[c] - py[c]);
        CHECK(std::sqrt(e2) <= std::sqrt(d2) + 1e-6);
    }
}

TEST_CASE("embedding file round-trip preserves everything bitwise") {
    const MatrixRM patches = random_patches(64, 7, 23);
    const NystromEmbedding emb = fit_nystrom(patches, 5, KernelSpec::rbf(0.04), 1e-6, 31);
    const std::string path =
        (std::filesystem::temp_directory_path() / "eckn_test_embedding.eckn").string();
    save_embedding(emb, path);
    const NystromEmbedding back = load_embedding(path);
    CHECK(back.p() == emb.p());
    CHECK(back.patch_dim() == emb.patch_dim());
    CHECK(back.kernel.family == emb.kernel.family);
    CHECK(back.kernel.alpha == emb.kernel.alpha);
    CHECK(back.eps == emb.eps);
    CHECK(back.seed == emb.seed);
    CHECK(std::memcmp(back.anchors.data(), emb.anchors.data(),
                      sizeof(double) * emb.anchors.size()) == 0);
    CHECK(std::memcmp(back.whitening.data(), emb.whitening.data(),
                      sizeof(double) * emb.whitening.size()) == 0);
    std::remove(path.c_str());
}

TEST_CASE("embedding loader rejects junk") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "eckn_bad_embedding.eckn").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("JUNKJUNKJUNK", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_embedding(path), IoError);
    CHECK_THROWS_AS(load_embedding("/nonexistent/nope.eckn"), IoError);
    std::remove(path.c_str());
}
