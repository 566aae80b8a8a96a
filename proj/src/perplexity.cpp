#include "desne/perplexity.hpp"

#include "desne/error.hpp"
#include "desne/parallel.hpp"
#include "desne/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace desne {

namespace {
constexpr double kLn2 = 0.69314718055994530941723212145818;
} // namespace

void DEConfig::validate() const {
    if (!(cr > 0.0 && cr <= 1.0)) throw std::invalid_argument("DEConfig: CR must be in (0, 1]");
    if (!(f_weight > 0.0 && f_weight < 2.0)) {
        throw std::invalid_argument("DEConfig: F must be in (0, 2)");
    }
    if (!(lb < ub)) throw std::invalid_argument("DEConfig: lb must be < ub");
    if (pop_size < 4) throw std::invalid_argument("DEConfig: pop_size must be >= 4");
    if (max_iter < 1) throw std::invalid_argument("DEConfig: max_iter must be >= 1");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("DEConfig: epsilon must be >= 0");
}

DEResult de_optimize(const std::function<double(double)>& objective, double target,
                     const DEConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int np = cfg.pop_size;

    std::vector<double> pop(np);
    std::vector<double> err(np);
    long evals = 0;
    for (int i = 0; i < np; ++i) {
        pop[i] = rng.uniform(cfg.lb, cfg.ub);
        err[i] = std::fabs(objective(pop[i]) - target);
        ++evals;
    }
    // NaN objective values (degenerate points) never win a comparison, so
    // they are rejected everywhere below; the argmin must skip them too.
    int best = 0;
    for (int i = 1; i < np; ++i) {
        if (err[i] < err[best] || std::isnan(err[best])) best = i;
    }
    double best_ind = pop[best];
    double best_err = err[best];

    for (long iter = 1; iter <= cfg.max_iter && !(best_err <= cfg.epsilon); ++iter) {
        for (int i = 0; i < np; ++i) {
            // Mutation: three distinct partners, none equal to i.
            std::size_t a, b, c;
            do { a = rng.index(np); } while (a == static_cast<std::size_t>(i));
            do { b = rng.index(np); } while (b == static_cast<std::size_t>(i) || b == a);
            do { c = rng.index(np); } while (c == static_cast<std::size_t>(i) || c == a || c == b);
            double mut = pop[a] + cfg.f_weight * (pop[b] - pop[c]);
            mut = std::clamp(mut, cfg.lb, cfg.ub);

            // Crossover: the genome is a scalar, so one Bernoulli(CR) draw
            // picks the whole mutant or keeps the parent.
            double c_rand = rng.uniform01();
            double trial = c_rand < cfg.cr ? mut : pop[i];

            // Selection.
            double trial_err = std::fabs(objective(trial) - target);
            ++evals;
            if (trial_err < err[i] || (std::isnan(err[i]) && !std::isnan(trial_err))) {
                pop[i] = trial;
                err[i] = trial_err;
                if (trial_err < best_err || (std::isnan(best_err) && !std::isnan(trial_err))) {
                    best_ind = trial;
                    best_err = trial_err;
                    if (best_err <= cfg.epsilon) break;
                }
            }
        }
    }
    return {best_ind, best_err, evals};
}

std::vector<double> conditional_row(std::span<const double> d2_row, std::size_t self,
                                    double sigma, const ScalarMath& math) {
    const std::size_t n = d2_row.size();
    if (self >= n) throw std::invalid_argument("conditional_row: self index out of range");
    if (!(sigma > 0.0)) throw std::invalid_argument("conditional_row: sigma must be positive");
    if (n < 2) throw std::invalid_argument("conditional_row: need at least one neighbor");

    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        if (j == self) continue;
        if (!std::isfinite(d2_row[j])) {
            throw std::invalid_argument("conditional_row: non-finite distance");
        }
        dmin = std::min(dmin, d2_row[j]);
    }

    // exp(-(d2 - dmin)/(2 sigma^2)): the shift keeps the largest term at 1,
    // so nothing overflows and the nearest neighbor never underflows.
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> out(n, 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == self) continue;
        double e = math.exp(-(d2_row[j] - dmin) * inv_two_sigma_sq);
        out[j] = e;
        sum += e;
    }
    const double inv_sum = math.recip(sum);
    for (std::size_t j = 0; j < n; ++j) {
        if (j != self) out[j] *= inv_sum;
    }
    return out;
}

double row_perplexity(std::span<const double> p_row, const ScalarMath& math) {
    double h = 0.0;
    for (double p : p_row) {
        if (p > 0.0) h -= p * math.log2(p);
    }
    return math.exp(h * kLn2); // 2^H
}

double row_perplexity_at(std::span<const double> d2_row, std::size_t self, double sigma,
                         const ScalarMath& math) {
    return row_perplexity(conditional_row(d2_row, self, sigma, math), math);
}

double row_perplexity_direct(std::span<const double> d2_row, std::size_t self, double sigma,
                             const ScalarMath& math) {
    const std::size_t n = d2_row.size();
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    // With e_j = exp(-a_j) and S = sum e_j, the entropy folds into
    // H = log2(S) + sum(e_j * a_j) / (S * ln 2); one pass, one log.
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == self) continue;
        double a = d2_row[j] * inv_two_sigma_sq;
        double e = math.exp(-a);
        sum += e;
        weighted += e * a;
    }
    if (!(sum >= std::numeric_limits<double>::min()) || !std::isfinite(sum)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double h = math.log2(sum) + weighted * math.recip(sum) / kLn2;
    return math.exp(h * kLn2);
}

SigmaResult binary_search_sigma(std::span<const double> d2_row, std::size_t self,
                                double target, int max_rounds, double tol,
                                const ScalarMath& math, double lb, double ub) {
    if (!(target > 1.0)) throw std::invalid_argument("binary_search_sigma: target must be > 1");
    double lo = lb;
    double hi = ub;
    double mid = 0.5 * (lo + hi);
    double perp = row_perplexity_direct(d2_row, self, mid, math);
    double err = std::fabs(perp - target);
    long evals = 1;
    for (int round = 1; round < max_rounds && !(err <= tol); ++round) {
        // A NaN evaluation (degenerate midpoint) is not below the target,
        // so the upper bound moves; the misbehavior this causes on
        // pathological rows is reported via the returned error, not fixed.
        if (perp < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        perp = row_perplexity_direct(d2_row, self, mid, math);
        err = std::fabs(perp - target);
        ++evals;
    }
    // The reported error is the achieved perplexity at the returned
    // midpoint, measured with the stabilized evaluator so it is finite
    // even when the search collapsed into the underflow region.
    return {mid, std::fabs(row_perplexity_at(d2_row, self, mid, math) - target), evals};
}

SigmaResult anneal_sigma(std::span<const double> d2_row, std::size_t self, double target,
                         std::uint64_t seed, int steps, const ScalarMath& math, double lb,
                         double ub) {
    if (!(target > 1.0)) throw std::invalid_argument("anneal_sigma: target must be > 1");
    Rng rng(seed);
    const double log_lo = std::log(lb);
    const double log_hi = std::log(ub);
    const double scale = 0.5 * (log_hi - log_lo);

    // Start at the upper bound: the kernel never underflows there, so the
    // walk always begins with a finite objective.
    double state = log_hi;
    double state_err =
        std::fabs(row_perplexity_direct(d2_row, self, std::exp(state), math) - target);
    double best_sigma = std::exp(state);
    double best_err = state_err;
    long evals = 1;

    double temperature = 1.0;
    for (int k = 0; k < steps; ++k) {
        // Proposal width follows the temperature, floored so the walk can
        // still move once the schedule has cooled.
        double width = scale * std::max(temperature, 1e-3);
        double prop = std::clamp(state + width * rng.normal(), log_lo, log_hi);
        double prop_err =
            std::fabs(row_perplexity_direct(d2_row, self, std::exp(prop), math) - target);
        ++evals;
        double delta = prop_err - state_err;
        bool accept = delta <= 0.0 || rng.uniform01() < std::exp(-delta / temperature);
        if (std::isnan(prop_err)) accept = false;
        if (std::isnan(state_err) && !std::isnan(prop_err)) accept = true;
        if (accept) {
            state = prop;
            state_err = prop_err;
            if (state_err < best_err || std::isnan(best_err)) {
                best_err = state_err;
                best_sigma = std::exp(state);
            }
        }
        temperature *= 0.95;
    }
    return {best_sigma, std::fabs(row_perplexity_at(d2_row, self, best_sigma, math) - target),
            evals};
}

AffinityMatrix joint_affinities(const Matrix& conditional, double floor) {
    const std::size_t n = conditional.rows();
    if (conditional.cols() != n) throw std::invalid_argument("joint_affinities: matrix not square");
    if (n < 2) throw std::invalid_argument("joint_affinities: need at least two points");
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) s += conditional(i, j);
        }
        if (std::fabs(s - 1.0) > 1e-6) {
            throw std::invalid_argument("joint_affinities: row " + std::to_string(i) +
                                        " sums to " + std::to_string(s));
        }
    }

    AffinityMatrix am;
    am.n = n;
    am.p = Matrix(n, n);
    const double inv_2n = 1.0 / (2.0 * static_cast<double>(n));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = (conditional(i, j) + conditional(j, i)) * inv_2n;
            if (v < floor) v = floor;
            am.p(i, j) = v;
            am.p(j, i) = v;
            total += 2.0 * v;
        }
    }
    const double inv_total = 1.0 / total;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) am.p(i, j) *= inv_total;
        }
    }
    return am;
}

Optimizer parse_optimizer(const std::string& name) {
    if (name == "bs") return Optimizer::kBinarySearch;
    if (name == "de") return Optimizer::kDifferentialEvolution;
    if (name == "sa") return Optimizer::kSimulatedAnnealing;
    throw DataError("unknown optimizer: " + name);
}

std::string optimizer_name(Optimizer o) {
    switch (o) {
        case Optimizer::kBinarySearch: return "bs";
        case Optimizer::kDifferentialEvolution: return "de";
        case Optimizer::kSimulatedAnnealing: return "sa";
    }
    return "?";
}

double SigmaVector::mean_error() const {
    if (per_row_error.empty()) return 0.0;
    double s = 0.0;
    for (double e : per_row_error) s += e;
    return s / static_cast<double>(per_row_error.size());
}

SigmaVector solve_sigmas(const DistanceMatrix& d2, double target, Optimizer opt,
                         const DEConfig& cfg, int threads, const ScalarMath& math) {
    cfg.validate();
    const std::size_t n = d2.n;
    if (n < 2) throw std::invalid_argument("solve_sigmas: need at least two points");
    const double max_perp = static_cast<double>(n - 1);
    if (!(target > 1.0 && target <= max_perp)) {
        throw std::invalid_argument("solve_sigmas: target must be in (1, N-1]");
    }

    SigmaVector out;
    out.sigma.assign(n, 0.0);
    out.per_row_error.assign(n, 0.0);
    out.evals.assign(n, 0);
    out.optimizer_tag = optimizer_name(opt);

    parallel_for(n, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            std::span<const double> row = d2.d2.row(r);

            // All-duplicate row: every off-diagonal distance equal, so the
            // conditional row is uniform and perplexity is N-1 for any
            // sigma. Report that error without an optimizer run.
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == r) continue;
                lo = std::min(lo, row[j]);
                hi = std::max(hi, row[j]);
            }
            if (lo == hi) {
                out.sigma[r] = 1.0;
                out.per_row_error[r] = std::fabs(max_perp - target);
                out.evals[r] = 1;
                continue;
            }

            const std::uint64_t row_seed = cfg.seed ^ static_cast<std::uint64_t>(r);
            switch (opt) {
                case Optimizer::kBinarySearch: {
                    SigmaResult res =
                        binary_search_sigma(row, r, target, 64, 1e-6, math, cfg.lb, cfg.ub);
                    out.sigma[r] = res.sigma;
                    out.per_row_error[r] = res.error;
                    out.evals[r] = res.evals;
                    break;
                }
                case Optimizer::kDifferentialEvolution: {
                    DEConfig row_cfg = cfg;
                    row_cfg.seed = row_seed;
                    DEResult res = de_optimize(
                        [&](double sigma) { return row_perplexity_direct(row, r, sigma, math); },
                        target, row_cfg);
                    out.sigma[r] = res.best_individual;
                    // Reported like the other searches: achieved perplexity
                    // at the returned sigma, stabilized evaluation.
                    out.per_row_error[r] =
                        std::fabs(row_perplexity_at(row, r, res.best_individual, math) - target);
                    out.evals[r] = res.evals;
                    break;
                }
                case Optimizer::kSimulatedAnnealing: {
                    SigmaResult res =
                        anneal_sigma(row, r, target, row_seed, 2000, math, cfg.lb, cfg.ub);
                    out.sigma[r] = res.sigma;
                    out.per_row_error[r] = res.error;
                    out.evals[r] = res.evals;
                    break;
                }
            }
        }
    });
    return out;
}

Matrix conditional_matrix(const DistanceMatrix& d2, const SigmaVector& sigmas, int threads,
                          const ScalarMath& math) {
    const std::size_t n = d2.n;
    if (sigmas.sigma.size() != n) {
        throw std::invalid_argument("conditional_matrix: sigma count mismatch");
    }
    Matrix cond(n, n);
    parallel_for(n, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            std::vector<double> row = conditional_row(d2.d2.row(r), r, sigmas.sigma[r], math);
            for (std::size_t j = 0; j < n; ++j) cond(r, j) = row[j];
        }
    });
    return cond;
}

} // namespace desne
