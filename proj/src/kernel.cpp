#include "eckn/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "eckn/rng.hpp"

namespace eckn {

namespace {
constexpr double kZeroNorm = 1e-12;
constexpr double kDomainSlack = 1e-9;
} // namespace

KernelSpec KernelSpec::exponential() { return KernelSpec{KernelFamily::Exponential, 0.0, 1, 0.0}; }

KernelSpec KernelSpec::rbf(double alpha) {
    if (alpha <= 0.0) throw ShapeError("KernelSpec::rbf: alpha must be positive");
    return KernelSpec{KernelFamily::RBFHomogeneous, alpha, 1, 0.0};
}

KernelSpec KernelSpec::rbf_from_bandwidth(double bw) {
    if (bw <= 0.0) throw ShapeError("KernelSpec::rbf_from_bandwidth: bandwidth must be positive");
    return rbf(1.0 / (bw * bw));
}

KernelSpec KernelSpec::arccos1() { return KernelSpec{KernelFamily::ArcCosine1, 0.0, 1, 0.0}; }

KernelSpec KernelSpec::polynomial(int degree, double offset) {
    if (degree < 1) throw ShapeError("KernelSpec::polynomial: degree must be >= 1");
    if (offset < 0.0) throw ShapeError("KernelSpec::polynomial: offset must be >= 0");
    return KernelSpec{KernelFamily::Polynomial, 0.0, degree, offset};
}

double KernelSpec::kprime_at_one() const {
    switch (family) {
    case KernelFamily::Exponential: return 1.0;
    case KernelFamily::RBFHomogeneous: return 2.0 * alpha;
    case KernelFamily::ArcCosine1: return 1.0;
    case KernelFamily::Polynomial: return degree / (1.0 + offset);
    }
    return 0.0;
}

bool KernelSpec::certified_nonexpansive() const {
    const double d = kprime_at_one();
    return d >= 0.0 && d <= 1.0 + 1e-12;
}

std::string KernelSpec::name() const {
    switch (family) {
    case KernelFamily::Exponential: return "exponential";
    case KernelFamily::RBFHomogeneous: return "rbf";
    case KernelFamily::ArcCosine1: return "arccos1";
    case KernelFamily::Polynomial: return "polynomial";
    }
    return "?";
}

std::string KernelSpec::param_name() const {
    switch (family) {
    case KernelFamily::Exponential: return "exponential";
    case KernelFamily::RBFHomogeneous: {
        const double bw = 1.0 / std::sqrt(alpha);
        const long bwr = std::lround(bw);
        if (std::abs(bw - bwr) < 1e-9) return "rbf_bw" + std::to_string(bwr);
        return "rbf_a" + std::to_string(alpha);
    }
    case KernelFamily::ArcCosine1: return "arccos1";
    case KernelFamily::Polynomial: return "poly_d" + std::to_string(degree);
    }
    return "?";
}

double kappa_eval(const KernelSpec& spec, double u) {
    if (u < -1.0 - kDomainSlack || u > 1.0 + kDomainSlack)
        throw ShapeError("kappa_eval: argument outside [-1, 1]");
    u = std::clamp(u, -1.0, 1.0);
    switch (spec.family) {
    case KernelFamily::Exponential: return std::exp(u - 1.0);
    case KernelFamily::RBFHomogeneous: return std::exp(-2.0 * spec.alpha * (1.0 - u));
    case KernelFamily::ArcCosine1:
        return (u * (std::numbers::pi - std::acos(u)) + std::sqrt(std::max(0.0, 1.0 - u * u))) /
               std::numbers::pi;
    case KernelFamily::Polynomial:
        return std::pow((u + spec.offset) / (1.0 + spec.offset), spec.degree);
    }
    return 0.0;
}

double kernel_eval(const KernelSpec& spec, const double* x, const double* y, std::size_t n) {
    double nx = 0.0, ny = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        nx += x[i] * x[i];
        ny += y[i] * y[i];
        dot += x[i] * y[i];
    }
    nx = std::sqrt(nx);
    ny = std::sqrt(ny);
    if (nx < kZeroNorm || ny < kZeroNorm) return 0.0;
    const double u = std::clamp(dot / (nx * ny), -1.0, 1.0);
    return nx * ny * kappa_eval(spec, u);
}

double kernel_eval(const KernelSpec& spec, const std::vector<double>& x,
                   const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("kernel_eval: vector dimensions differ");
    return kernel_eval(spec, x.data(), y.data(), x.size());
}

CertReport certify_nonexpansive(const KernelSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ShapeError("certify_nonexpansive: n_samples must be >= 1");
    CertReport rep;
    rep.kprime1 = spec.kprime_at_one();
    rep.analytic_pass = spec.certified_nonexpansive();
    rep.n_samples = n_samples;
    rep.sampled_nonexpansive_pass = true;
    rep.sampled_lower_bound_pass = true;
    rep.worst_expansion_excess = -std::numeric_limits<double>::infinity();
    rep.worst_lower_bound_gap = std::numeric_limits<double>::infinity();

    Rng rng(seed);
    const int dim = 8;
    std::vector<double> x(dim), y(dim);
    for (int s = 0; s < n_samples; ++s) {
        for (int i = 0; i < dim; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        // bias toward nearby pairs; expansion shows up at small distances
        if (s % 2 == 1) {
            const double t = 0.05 + 0.2 * rng.uniform();
            for (int i = 0; i < dim; ++i) y[i] = x[i] + t * (y[i] - x[i]);
        }
        const double kxx = kernel_eval(spec, x.data(), x.data(), dim);
        const double kyy = kernel_eval(spec, y.data(), y.data(), dim);
        const double kxy = kernel_eval(spec, x.data(), y.data(), dim);
        double d2 = 0.0, dot = 0.0;
        for (int i = 0; i < dim; ++i) {
            d2 += (x[i] - y[i]) * (x[i] - y[i]);
            dot += x[i] * y[i];
        }
        const double excess = (kxx + kyy - 2.0 * kxy) - d2;
        const double gap = kxy - dot;
        rep.worst_expansion_excess = std::max(rep.worst_expansion_excess, excess);
        rep.worst_lower_bound_gap = std::min(rep.worst_lower_bound_gap, gap);
        const bool violates = excess > 1e-9 || gap < -1e-9;
        if (violates && rep.counterexample_x.empty()) {
            rep.counterexample_x = x;
            rep.counterexample_y = y;
        }
        if (excess > 1e-9) rep.sampled_nonexpansive_pass = false;
        if (gap < -1e-9) rep.sampled_lower_bound_pass = false;
    }
    return rep;
}

} // namespace eckn
