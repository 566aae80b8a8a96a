#pragma once

#include <string>

namespace desne {

// Configuration of the scalar arithmetic-unit models. cordic_iterations
// counts hyperbolic micro-rotations (indices 4, 13, 40 are repeated on top
// of that, per the standard convergence schedule); newton_iterations counts
// reciprocal refinement steps.
struct KernelConfig {
    int cordic_iterations = 50;
    int newton_iterations = 5;

    void validate() const;
};

// exp(x) via base-2 range reduction (x = k*ln2 + r, |r| <= ln2/2) followed
// by hyperbolic CORDIC in rotation mode. Saturates: +inf above the double
// range, 0 below it. NaN passes through.
double kexp(double x, const KernelConfig& cfg = {});

// log2(x) via mantissa/exponent split, then hyperbolic CORDIC in vectoring
// mode on the mantissa (ln m = 2*atanh((m-1)/(m+1))). Throws
// std::domain_error for x <= 0 or NaN.
double klog2(double x, const KernelConfig& cfg = {});

// 1/x by Newton iteration z <- z*(2 - x*z), seeded from the negated
// exponent so the initial relative error is at most 0.25. Throws
// std::domain_error for zero or non-finite input.
double krecip(double x, const KernelConfig& cfg = {});

enum class MathBackend { kReference, kCordicNewton };

MathBackend parse_backend(const std::string& name);
std::string backend_name(MathBackend b);

// Scalar math dispatch threaded through the affinity/KL pipeline so any
// run can be repeated with the accelerator kernel models in place of libm.
class ScalarMath {
public:
    ScalarMath() = default;
    explicit ScalarMath(MathBackend backend, KernelConfig cfg = {})
        : backend_(backend), cfg_(cfg) {
        cfg_.validate();
    }

    MathBackend backend() const { return backend_; }

    double exp(double x) const;
    double log2(double x) const;
    double log(double x) const;
    double recip(double x) const;

private:
    MathBackend backend_ = MathBackend::kReference;
    KernelConfig cfg_{};
};

} // namespace desne
