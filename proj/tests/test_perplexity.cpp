#include "desne/perplexity.hpp"
#include "desne/distance.hpp"
#include "desne/rng.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>

using namespace desne;

TEST_CASE("conditional_row: two equidistant neighbors split evenly") {
    std::vector<double> d2{0.0, 1.0, 1.0};
    std::vector<double> p = conditional_row(d2, 0, 0.7);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("conditional_row: dominant near neighbor takes all the mass") {
    std::vector<double> d2{0.0, 1.0, 1e9};
    std::vector<double> p = conditional_row(d2, 0, 1.0);
    CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p[2] <= 1e-12);
}

TEST_CASE("conditional_row matches the direct formula where it is stable") {
    Rng rng(31);
    std::vector<double> d2(20, 0.0);
    for (std::size_t j = 1; j < d2.size(); ++j) d2[j] = rng.uniform(0.1, 4.0);
    const double sigma = 0.7;
    std::vector<double> p = conditional_row(d2, 0, sigma);
    double denom = 0.0;
    for (std::size_t j = 1; j < d2.size(); ++j) {
        denom += std::exp(-d2[j] / (2.0 * sigma * sigma));
    }
    double sum = 0.0;
    for (std::size_t j = 1; j < d2.size(); ++j) {
        double direct = std::exp(-d2[j] / (2.0 * sigma * sigma)) / denom;
        CHECK(std::fabs(p[j] - direct) <= 1e-12);
        sum += p[j];
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
}

TEST_CASE("conditional_row is invariant under a constant distance shift") {
    Rng rng(32);
    std::vector<double> d2(16, 0.0);
    for (std::size_t j = 0; j < d2.size(); ++j) d2[j] = rng.uniform(0.0, 5.0);
    d2[3] = 0.0; // self
    std::vector<double> shifted = d2;
    for (double& v : shifted) v += 2.5;
    std::vector<double> a = conditional_row(d2, 3, 0.9);
    std::vector<double> b = conditional_row(shifted, 3, 0.9);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::fabs(a[j] - b[j]) <= 1e-12);
}

TEST_CASE("conditional_row rejects bad input") {
    std::vector<double> nan_row{0.0, std::nan(""), 1.0};
    CHECK_THROWS_AS(conditional_row(nan_row, 0, 1.0), std::invalid_argument);
    std::vector<double> ok{0.0, 1.0};
    CHECK_THROWS_AS(conditional_row(ok, 0, 0.0), std::invalid_argument);
}

TEST_CASE("row_perplexity of uniform and one-hot rows") {
    CHECK(row_perplexity(std::vector<double>{0.0, 0.5, 0.5}) ==
          doctest::Approx(2.0).epsilon(1e-12));
    std::vector<double> uniform7(8, 1.0 / 7.0);
    uniform7[0] = 0.0;
    CHECK(row_perplexity(uniform7) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(row_perplexity(std::vector<double>{0.0, 1.0, 0.0}) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perplexity is bounded by the neighbor count") {
    Rng rng(33);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> d2(12, 0.0);
        for (std::size_t j = 1; j < d2.size(); ++j) d2[j] = rng.uniform(0.01, 9.0);
        double perp = row_perplexity_at(d2, 0, std::pow(10.0, rng.uniform(-2.0, 2.0)));
        CHECK(perp >= 1.0 - 1e-9);
        CHECK(perp <= 11.0 + 1e-9);
    }
}

TEST_CASE("de_optimize solves the identity objective to epsilon") {
    DEConfig cfg;
    cfg.seed = 7;
    DEResult res = de_optimize([](double x) { return x; }, 15.0, cfg);
    CHECK(std::fabs(res.best_individual - 15.0) <= 1e-10);
    CHECK(res.best_error <= 1e-10);
    CHECK(res.evals >= cfg.pop_size);
}

TEST_CASE("de_optimize is deterministic per seed") {
    DEConfig cfg;
    cfg.seed = 99;
    auto square = [](double x) { return x * x; };
    DEResult a = de_optimize(square, 77.0, cfg);
    DEResult b = de_optimize(square, 77.0, cfg);
    CHECK(a.best_individual == b.best_individual);
    CHECK(a.best_error == b.best_error);
    CHECK(a.evals == b.evals);
    cfg.seed = 100;
    DEResult c = de_optimize(square, 77.0, cfg);
    CHECK(c.best_individual != a.best_individual);
}

TEST_CASE("de_optimize stays inside the bounds") {
    DEConfig cfg;
    cfg.lb = 2.0;
    cfg.ub = 3.0;
    cfg.max_iter = 50;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        // Unreachable target forces the full iteration budget.
        DEResult res = de_optimize([](double x) { return x; }, 100.0, cfg);
        CHECK(res.best_individual >= cfg.lb);
        CHECK(res.best_individual <= cfg.ub);
    }
}

TEST_CASE("de_optimize hits a perplexity target on a random row") {
    Matrix blob = testutil::gaussian_blob(64, 8, 34);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    std::span<const double> row = d2.d2.row(5);
    DEConfig cfg;
    cfg.seed = 5;
    DEResult res = de_optimize(
        [&](double sigma) { return row_perplexity_direct(row, 5, sigma); }, 15.0, cfg);
    CHECK(std::fabs(row_perplexity_at(row, 5, res.best_individual) - 15.0) <= 1e-6);
}

TEST_CASE("direct and stabilized perplexity agree away from underflow") {
    Matrix blob = testutil::gaussian_blob(32, 6, 30);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    for (double sigma : {0.5, 1.0, 3.0, 20.0}) {
        double direct = row_perplexity_direct(d2.d2.row(1), 1, sigma);
        double stable = row_perplexity_at(d2.d2.row(1), 1, sigma);
        CHECK(std::fabs(direct - stable) <= 1e-10);
    }
    // Deep underflow: the direct formula signals a degenerate bandwidth.
    CHECK(std::isnan(row_perplexity_direct(d2.d2.row(1), 1, 1e-12)));
    CHECK(row_perplexity_at(d2.d2.row(1), 1, 1e-12) == 1.0);
}

TEST_CASE("binary search converges in the monotone regime") {
    Matrix blob = testutil::gaussian_blob(64, 8, 35);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    SigmaResult res = binary_search_sigma(d2.d2.row(3), 3, 15.0);
    CHECK(res.error <= 1e-6);
    CHECK(std::fabs(row_perplexity_at(d2.d2.row(3), 3, res.sigma) - 15.0) <= 1e-6);

    SigmaResult again = binary_search_sigma(d2.d2.row(3), 3, 15.0);
    CHECK(again.sigma == res.sigma);
    CHECK(again.evals == res.evals);
}

TEST_CASE("binary search reports unreachable targets instead of fixing them") {
    // Max perplexity is N-1 = 4; ask for 50 and the search walks to the
    // upper bound with the gap as its error.
    Matrix blob = testutil::gaussian_blob(5, 3, 36);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    SigmaResult res = binary_search_sigma(d2.d2.row(0), 0, 50.0);
    CHECK(res.sigma == doctest::Approx(1000.0).epsilon(1e-6));
    CHECK(res.error == doctest::Approx(50.0 - 4.0).epsilon(1e-3));
}

TEST_CASE("simulated annealing lands near the target") {
    Matrix blob = testutil::gaussian_blob(64, 8, 37);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    SigmaResult res = anneal_sigma(d2.d2.row(2), 2, 15.0, 42);
    CHECK(res.error <= 1e-3);

    SigmaResult again = anneal_sigma(d2.d2.row(2), 2, 15.0, 42);
    CHECK(again.sigma == res.sigma);
    CHECK(again.error == res.error);
}

TEST_CASE("joint_affinities: N=2 forces a half/half split") {
    Matrix cond = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
    AffinityMatrix p = joint_affinities(cond);
    CHECK(p.p(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.p(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.p(0, 0) == 0.0);
}

TEST_CASE("joint_affinities of symmetric conditionals is p/N before flooring") {
    Matrix cond = Matrix::from_rows({{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}});
    AffinityMatrix p = joint_affinities(cond);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            CHECK(p.p(i, j) == doctest::Approx(0.5 / 3.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("joint_affinities invariants on random conditionals") {
    Rng rng(38);
    for (int t = 0; t < 20; ++t) {
        std::size_t n = 3 + rng.index(20);
        Matrix cond(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                cond(i, j) = rng.uniform(1e-6, 1.0);
                sum += cond(i, j);
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) cond(i, j) /= sum;
            }
        }
        AffinityMatrix p = joint_affinities(cond);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p.p(i, i) == 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(p.p(i, j) == p.p(j, i));
                if (i != j) {
                    CHECK(p.p(i, j) >= 1e-12 * (1.0 - 1e-6));
                    total += p.p(i, j);
                }
            }
        }
        CHECK(std::fabs(total - 1.0) <= 1e-12 * static_cast<double>(n * n));
    }
}

TEST_CASE("joint_affinities rejects unnormalized rows") {
    Matrix cond = Matrix::from_rows({{0.0, 0.9}, {1.0, 0.0}});
    CHECK_THROWS_AS(joint_affinities(cond), std::invalid_argument);
}

TEST_CASE("solve_sigmas with DE nails the target on a Gaussian blob") {
    Matrix blob = testutil::gaussian_blob(64, 8, 39);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    DEConfig cfg;
    cfg.seed = 3;
    SigmaVector sv = solve_sigmas(d2, 15.0, Optimizer::kDifferentialEvolution, cfg);
    CHECK(sv.mean_error() <= 1e-6);
    CHECK(sv.optimizer_tag == "de");
    for (double s : sv.sigma) {
        CHECK(s >= cfg.lb);
        CHECK(s <= cfg.ub);
    }
}

TEST_CASE("solve_sigmas is reproducible across worker counts") {
    Matrix blob = testutil::gaussian_blob(40, 6, 40);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    DEConfig cfg;
    cfg.seed = 17;
    SigmaVector one = solve_sigmas(d2, 10.0, Optimizer::kDifferentialEvolution, cfg, 1);
    SigmaVector four = solve_sigmas(d2, 10.0, Optimizer::kDifferentialEvolution, cfg, 4);
    CHECK(one.sigma == four.sigma);
    CHECK(one.per_row_error == four.per_row_error);
    CHECK(one.evals == four.evals);
}

TEST_CASE("solve_sigmas: N=3 with target 2 reaches the uniform limit") {
    Matrix pts = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
    DistanceMatrix d2 = pairwise_sq_dist(pts);
    DEConfig cfg;
    for (Optimizer opt : {Optimizer::kBinarySearch, Optimizer::kDifferentialEvolution,
                          Optimizer::kSimulatedAnnealing}) {
        SigmaVector sv = solve_sigmas(d2, 2.0, opt, cfg);
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(row_perplexity_at(d2.d2.row(r), r, sv.sigma[r]) ==
                  doctest::Approx(2.0).epsilon(1e-3));
        }
    }
}

TEST_CASE("solve_sigmas rejects out-of-range targets") {
    Matrix pts = Matrix::from_rows({{0.0}, {1.0}, {2.0}});
    DistanceMatrix d2 = pairwise_sq_dist(pts);
    DEConfig cfg;
    CHECK_THROWS_AS(solve_sigmas(d2, 1.0, Optimizer::kBinarySearch, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_sigmas(d2, 2.5, Optimizer::kBinarySearch, cfg),
                    std::invalid_argument);
}

TEST_CASE("all-duplicate rows report the constant-perplexity error") {
    Matrix dup(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t k = 0; k < 3; ++k) dup(i, k) = 1.0;
    }
    DistanceMatrix d2 = pairwise_sq_dist(dup);
    DEConfig cfg;
    SigmaVector sv = solve_sigmas(d2, 2.0, Optimizer::kDifferentialEvolution, cfg);
    for (double e : sv.per_row_error) CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> cond = conditional_row(d2.d2.row(0), 0, 1.0);
    for (std::size_t j = 1; j < 4; ++j) {
        CHECK(cond[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("DE beats binary search on aggregate error") {
    Matrix blob = testutil::gaussian_blob(48, 6, 41);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    DEConfig cfg;
    cfg.seed = 11;
    double de = solve_sigmas(d2, 12.0, Optimizer::kDifferentialEvolution, cfg).mean_error();
    double bs = solve_sigmas(d2, 12.0, Optimizer::kBinarySearch, cfg).mean_error();
    double sa = solve_sigmas(d2, 12.0, Optimizer::kSimulatedAnnealing, cfg).mean_error();
    CHECK(de <= bs);
    CHECK(de <= sa);
}

TEST_CASE("bisection collapses on a row whose solution hugs the underflow edge") {
    // Distances around 4e8 put the kernel underflow boundary near
    // sigma = 518 while the target perplexity is only reachable slightly
    // above it. Bisection's first probe at 500 lands in the dead zone, the
    // upper bound moves the wrong way, and the search never returns to the
    // feasible region; DE keeps sampling it and converges.
    Rng rng(45);
    const std::size_t n = 64;
    std::vector<double> d2(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) d2[j] = 4e8 + rng.uniform(0.0, 7.5e6);

    SigmaResult bs = binary_search_sigma(d2, 0, 15.0);
    CHECK(bs.sigma < 1.0);   // collapsed toward the lower bound
    CHECK(bs.error > 10.0);  // reported, not repaired

    DEConfig cfg;
    cfg.seed = 9;
    DEResult de = de_optimize(
        [&](double sigma) { return row_perplexity_direct(d2, 0, sigma); }, 15.0, cfg);
    CHECK(std::fabs(row_perplexity_at(d2, 0, de.best_individual) - 15.0) <= 1e-6);
}

TEST_CASE("DE wins against SA on at least 90% of rows") {
    Matrix blob = testutil::gaussian_blob(64, 8, 44);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    DEConfig cfg;
    cfg.seed = 21;
    SigmaVector de = solve_sigmas(d2, 15.0, Optimizer::kDifferentialEvolution, cfg, 2);
    SigmaVector sa = solve_sigmas(d2, 15.0, Optimizer::kSimulatedAnnealing, cfg, 2);
    std::size_t wins = 0;
    for (std::size_t r = 0; r < 64; ++r) {
        if (de.per_row_error[r] <= sa.per_row_error[r]) ++wins;
    }
    CHECK(wins >= 58); // >= 90% of 64 rows
}

TEST_CASE("DEConfig rejects out-of-range parameters") {
    DEConfig cfg;
    cfg.cr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = DEConfig{};
    cfg.f_weight = 2.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = DEConfig{};
    cfg.lb = 5.0;
    cfg.ub = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = DEConfig{};
    cfg.pop_size = 3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("conditional_matrix stacks normalized rows") {
    Matrix blob = testutil::gaussian_blob(20, 5, 42);
    DistanceMatrix d2 = pairwise_sq_dist(blob);
    DEConfig cfg;
    SigmaVector sv = solve_sigmas(d2, 8.0, Optimizer::kBinarySearch, cfg);
    Matrix cond = conditional_matrix(d2, sv);
    for (std::size_t i = 0; i < cond.rows(); ++i) {
        CHECK(cond(i, i) == 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < cond.cols(); ++j) sum += cond(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
