#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eckn/error.hpp"

namespace eckn {

enum class KernelFamily { Exponential, RBFHomogeneous, ArcCosine1, Polynomial };

// Dot-product kernel profile k with k(1) = 1. The homogeneous kernel is
// K(x,y) = |x||y| k(<x,y>/(|x||y|)), with K = 0 when either argument is 0.
//
// Profiles:
//   exponential:  k(u) = exp(u - 1)
//   rbf (alpha):  k(u) = exp(-2*alpha*(1 - u))   (unit-sphere restriction of
//                 exp(-alpha*|x-y|^2); Gaussian "bandwidth" bw maps to
//                 alpha = 1/bw^2)
//   arccos1:      k(u) = (u*(pi - acos(u)) + sqrt(1 - u^2)) / pi
//   polynomial:   k(u) = ((u + c)/(1 + c))^d, offset c >= 0
struct KernelSpec {
    KernelFamily family = KernelFamily::Exponential;
    double alpha = 0.0;  // RBF parameter
    int degree = 1;      // polynomial degree
    double offset = 0.5; // polynomial offset c

    static KernelSpec exponential();
    static KernelSpec rbf(double alpha);
    static KernelSpec rbf_from_bandwidth(double bw);
    static KernelSpec arccos1();
    static KernelSpec polynomial(int degree, double offset = 0.5);

    // k'(1); non-expansive families satisfy 0 <= k'(1) <= 1.
    double kprime_at_one() const;
    bool certified_nonexpansive() const;

    std::string name() const;       // family tag
    std::string param_name() const; // family tag with parameters, CSV-safe
};

// Profile evaluation; u is clamped into [-1, 1] within 1e-9 slack, values
// further out raise ShapeError.
double kappa_eval(const KernelSpec& spec, double u);

// Homogeneous kernel on vectors. Norms below 1e-12 count as zero.
double kernel_eval(const KernelSpec& spec, const double* x, const double* y, std::size_t n);
double kernel_eval(const KernelSpec& spec, const std::vector<double>& x,
                   const std::vector<double>& y);

struct CertReport {
    double kprime1 = 0.0;
    bool analytic_pass = false; // 0 <= k'(1) <= 1
    bool sampled_nonexpansive_pass = false;
    bool sampled_lower_bound_pass = false;
    int n_samples = 0;
    // max over pairs of |phi(x)-phi(y)|^2 - |x-y|^2 (positive = expansion)
    double worst_expansion_excess = 0.0;
    // min over pairs of K(x,y) - <x,y> (negative = bound violated)
    double worst_lower_bound_gap = 0.0;
    // first violating pair, if any
    std::vector<double> counterexample_x, counterexample_y;

    bool pass() const {
        return analytic_pass && sampled_nonexpansive_pass && sampled_lower_bound_pass;
    }
};

// Checks the non-expansiveness constraints analytically and on sampled pairs.
// Failures are recorded in the report, never thrown.
CertReport certify_nonexpansive(const KernelSpec& spec, int n_samples, std::uint64_t seed);

} // namespace eckn
