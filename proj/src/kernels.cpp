#include "desne/kernels.hpp"

#include "desne/error.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace desne {
namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;
constexpr int kMaxCordicIterations = 64;

// Hyperbolic CORDIC converges only if the angles at indices 4, 13, 40, ...
// (i_{k+1} = 3*i_k + 1) are applied twice.
bool repeated_index(int i) { return i == 4 || i == 13 || i == 40; }

struct CordicTables {
    // atanh(2^-i) for i = 1..kMaxCordicIterations.
    std::array<double, kMaxCordicIterations + 1> atanh_pow2{};
    // Inverse hyperbolic gain 1/K_n for every supported iteration count,
    // accounting for the repeated indices in the schedule.
    std::array<double, kMaxCordicIterations + 1> inv_gain{};
};

const CordicTables& tables() {
    static const CordicTables t = [] {
        CordicTables tb;
        double gain = 1.0;
        for (int i = 1; i <= kMaxCordicIterations; ++i) {
            double p = std::ldexp(1.0, -i);
            tb.atanh_pow2[i] = std::atanh(p);
            gain *= std::sqrt(1.0 - p * p);
            if (repeated_index(i)) gain *= std::sqrt(1.0 - p * p);
            tb.inv_gain[i] = 1.0 / gain;
        }
        return tb;
    }();
    return t;
}

// Rotation mode: returns e^z for |z| <= ~1.11.
double cordic_exp_core(double z, int iterations) {
    const CordicTables& tb = tables();
    double x = tb.inv_gain[iterations];
    double y = 0.0;
    for (int i = 1; i <= iterations; ++i) {
        int reps = repeated_index(i) ? 2 : 1;
        double p = std::ldexp(1.0, -i);
        double a = tb.atanh_pow2[i];
        for (int r = 0; r < reps; ++r) {
            double d = z >= 0.0 ? 1.0 : -1.0;
            double xn = x + d * y * p;
            double yn = y + d * x * p;
            x = xn;
            y = yn;
            z -= d * a;
        }
    }
    return x + y; // cosh + sinh
}

// Vectoring mode: returns atanh(y0/x0) for x0 > 0, |y0/x0| <= ~0.81.
double cordic_atanh_core(double x, double y, int iterations) {
    const CordicTables& tb = tables();
    double z = 0.0;
    for (int i = 1; i <= iterations; ++i) {
        int reps = repeated_index(i) ? 2 : 1;
        double p = std::ldexp(1.0, -i);
        double a = tb.atanh_pow2[i];
        for (int r = 0; r < reps; ++r) {
            double d = y < 0.0 ? 1.0 : -1.0;
            double xn = x + d * y * p;
            double yn = y + d * x * p;
            x = xn;
            y = yn;
            z -= d * a;
        }
    }
    return z;
}

} // namespace

void KernelConfig::validate() const {
    if (cordic_iterations < 8 || cordic_iterations > kMaxCordicIterations) {
        throw std::invalid_argument("cordic_iterations must be in [8, 64]");
    }
    if (newton_iterations < 1) {
        throw std::invalid_argument("newton_iterations must be >= 1");
    }
}

double kexp(double x, const KernelConfig& cfg) {
    cfg.validate();
    if (std::isnan(x)) return x;
    if (x > 710.0) return HUGE_VAL;
    if (x < -746.0) return 0.0;
    // x = k*ln2 + r with |r| <= ln2/2, so e^x = 2^k * e^r.
    double k = std::nearbyint(x / kLn2);
    double r = x - k * kLn2;
    double er = cordic_exp_core(r, cfg.cordic_iterations);
    return std::ldexp(er, static_cast<int>(k));
}

double klog2(double x, const KernelConfig& cfg) {
    cfg.validate();
    if (std::isnan(x) || x <= 0.0) {
        throw std::domain_error("klog2: input must be positive");
    }
    if (std::isinf(x)) return x;
    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    // ln m = 2*atanh((m-1)/(m+1)); the argument stays in [-1/3, 0).
    double lnm = 2.0 * cordic_atanh_core(m + 1.0, m - 1.0, cfg.cordic_iterations);
    return static_cast<double>(e) + lnm / kLn2;
}

double krecip(double x, const KernelConfig& cfg) {
    cfg.validate();
    if (x == 0.0 || !std::isfinite(x)) {
        throw std::domain_error("krecip: input must be finite and nonzero");
    }
    bool negative = std::signbit(x);
    double a = std::fabs(x);
    int e = 0;
    double m = std::frexp(a, &e); // a = m * 2^e, m in [0.5, 1)
    // Seed z0 = (2 - m) * 2^-e gives a*z0 = 1 - (1-m)^2, error <= 0.25.
    double z = std::ldexp(2.0 - m, -e);
    for (int i = 0; i < cfg.newton_iterations; ++i) {
        z = z * (2.0 - a * z);
    }
    return negative ? -z : z;
}

MathBackend parse_backend(const std::string& name) {
    if (name == "reference") return MathBackend::kReference;
    if (name == "cordic-newton") return MathBackend::kCordicNewton;
    throw DataError("unknown math backend: " + name);
}

std::string backend_name(MathBackend b) {
    return b == MathBackend::kReference ? "reference" : "cordic-newton";
}

double ScalarMath::exp(double x) const {
    return backend_ == MathBackend::kReference ? std::exp(x) : kexp(x, cfg_);
}

double ScalarMath::log2(double x) const {
    if (backend_ == MathBackend::kReference) {
        if (std::isnan(x) || x <= 0.0) throw std::domain_error("log2: input must be positive");
        return std::log2(x);
    }
    return klog2(x, cfg_);
}

double ScalarMath::log(double x) const { return log2(x) * kLn2; }

double ScalarMath::recip(double x) const {
    return backend_ == MathBackend::kReference ? 1.0 / x : krecip(x, cfg_);
}

} // namespace desne
