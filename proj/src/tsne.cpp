#include "desne/tsne.hpp"

#include "desne/error.hpp"
#include "desne/parallel.hpp"
#include "desne/rng.hpp"
#include "desne/util.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace desne {

void TsneConfig::validate() const {
    if (dims < 1) throw std::invalid_argument("TsneConfig: dims must be >= 1");
    if (iterations < 1) throw std::invalid_argument("TsneConfig: iterations must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TsneConfig: learning_rate must be > 0");
    if (!(momentum_early >= 0.0 && momentum_early < 1.0) ||
        !(momentum_late >= 0.0 && momentum_late < 1.0)) {
        throw std::invalid_argument("TsneConfig: momenta must be in [0, 1)");
    }
    if (early_exaggeration_iters < 0 || momentum_switch_iter < 0) {
        throw std::invalid_argument("TsneConfig: iteration thresholds must be >= 0");
    }
    if (!(early_exaggeration_factor >= 1.0)) {
        throw std::invalid_argument("TsneConfig: exaggeration factor must be >= 1");
    }
    if (!(init_std > 0.0)) throw std::invalid_argument("TsneConfig: init_std must be > 0");
}

std::string TsneConfig::canonical() const {
    std::ostringstream os;
    os << "dims=" << dims << "\niterations=" << iterations
       << "\nlearning_rate=" << format_g17(learning_rate)
       << "\nmomentum_early=" << format_g17(momentum_early)
       << "\nmomentum_late=" << format_g17(momentum_late)
       << "\nmomentum_switch_iter=" << momentum_switch_iter
       << "\nearly_exaggeration_factor=" << format_g17(early_exaggeration_factor)
       << "\nearly_exaggeration_iters=" << early_exaggeration_iters
       << "\ninit_std=" << format_g17(init_std) << "\nseed=" << seed << "\n";
    return os.str();
}

LowDimAffinity low_dim_affinities(const Matrix& y, const ScalarMath& math, int threads) {
    const std::size_t n = y.rows();
    const std::size_t d = y.cols();
    if (n < 2) throw std::invalid_argument("low_dim_affinities: need at least two points");
    if (!y.all_finite()) throw std::invalid_argument("low_dim_affinities: non-finite layout");

    LowDimAffinity out;
    out.n = n;
    out.w = Matrix(n, n);
    out.q = Matrix(n, n);

    // Row-partial sums are reduced in index order afterwards so the total
    // does not depend on the worker count.
    std::vector<double> row_sum(n, 0.0);
    parallel_for(n, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            const double* yi = y.data() + i * d;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* yj = y.data() + j * d;
                double dist = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    double diff = yi[k] - yj[k];
                    dist += diff * diff;
                }
                double w = math.recip(1.0 + dist);
                out.w(i, j) = w;
                acc += w;
            }
            row_sum[i] = acc;
        }
    });
    double z = 0.0;
    for (double s : row_sum) z += s;
    out.z = z;

    const double inv_z = math.recip(z);
    parallel_for(n, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) out.q(i, j) = out.w(i, j) * inv_z;
            }
        }
    });
    return out;
}

double kl_divergence(const AffinityMatrix& p, const LowDimAffinity& q, const ScalarMath& math) {
    const std::size_t n = p.n;
    if (q.n != n) throw std::invalid_argument("kl_divergence: dimension mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double pij = p.p(i, j);
            if (pij <= 1e-12) continue;
            kl += pij * math.log(pij * math.recip(q.q(i, j)));
        }
    }
    return kl;
}

Matrix kl_gradient(const AffinityMatrix& p, const LowDimAffinity& qc, const Matrix& y,
                   int threads) {
    const std::size_t n = y.rows();
    const std::size_t d = y.cols();
    if (p.n != n || qc.n != n) throw std::invalid_argument("kl_gradient: dimension mismatch");

    Matrix grad(n, d);
    parallel_for(n, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            const double* yi = y.data() + i * d;
            double* gi = grad.data() + i * d;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* yj = y.data() + j * d;
                double coeff = 4.0 * (p.p(i, j) - qc.q(i, j)) * qc.w(i, j);
                for (std::size_t k = 0; k < d; ++k) {
                    gi[k] += coeff * (yi[k] - yj[k]);
                }
            }
        }
    });
    return grad;
}

std::pair<Embedding, LossTrace> run_tsne(const AffinityMatrix& p, const TsneConfig& cfg,
                                         const ScalarMath& math, int threads,
                                         const IterationObserver& observer) {
    cfg.validate();
    const std::size_t n = p.n;
    if (n < 2) throw std::invalid_argument("run_tsne: need at least two points");
    const std::size_t d = static_cast<std::size_t>(cfg.dims);

    Rng rng(cfg.seed);
    Matrix y(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) y(i, k) = cfg.init_std * rng.normal();
    }
    Matrix y_prev = y;

    // Exaggerated affinities drive the first phase; KL is always recorded
    // against the true p so the trace is comparable across phases.
    AffinityMatrix p_ex;
    p_ex.n = n;
    p_ex.p = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p_ex.p(i, j) = p.p(i, j) * cfg.early_exaggeration_factor;
        }
    }

    LossTrace trace;
    trace.iterations = cfg.iterations;
    trace.exaggeration_end = std::min(cfg.early_exaggeration_iters, cfg.iterations);
    trace.kl_per_iteration.reserve(cfg.iterations);

    for (int it = 0; it < cfg.iterations; ++it) {
        LowDimAffinity ld = low_dim_affinities(y, math, threads);
        double kl = kl_divergence(p, ld, math);
        if (!std::isfinite(kl)) {
            throw InternalError("run_tsne: non-finite KL at iteration " + std::to_string(it));
        }
        trace.kl_per_iteration.push_back(kl);

        const bool exaggerated = it < cfg.early_exaggeration_iters;
        Matrix grad = kl_gradient(exaggerated ? p_ex : p, ld, y, threads);

        const double momentum =
            it < cfg.momentum_switch_iter ? cfg.momentum_early : cfg.momentum_late;
        Matrix y_next(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                y_next(i, k) = y(i, k) - cfg.learning_rate * grad(i, k) +
                               momentum * (y(i, k) - y_prev(i, k));
            }
        }
        // Re-center every column; the objective is translation invariant.
        for (std::size_t k = 0; k < d; ++k) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += y_next(i, k);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) y_next(i, k) -= mean;
        }
        y_prev = std::move(y);
        y = std::move(y_next);

        if (observer) observer(it, y, kl);
    }

    Embedding emb;
    emb.y = std::move(y);
    emb.seed = cfg.seed;
    emb.config_hash = fnv1a_hex(cfg.canonical());
    return {std::move(emb), std::move(trace)};
}

} // namespace desne
