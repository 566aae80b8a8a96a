#include "desne/distance.hpp"
#include "desne/error.hpp"
#include "desne/rng.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace desne;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("row_norms") {
    CHECK(row_norms(Matrix::from_rows({{3.0, 4.0}}))[0] == 25.0);
    Matrix zeros(4, 3);
    for (double v : row_norms(zeros)) CHECK(v == 0.0);

    Matrix m = testutil::gaussian_blob(50, 10, 21);
    std::vector<double> fast = row_norms(m);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m.cols(); ++k) acc += m(i, k) * m(i, k);
        CHECK(fast[i] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("gram examples and tile independence") {
    Matrix eye = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    Matrix g = gram(eye);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(1, 1) == 1.0);

    CHECK(gram(Matrix::from_rows({{2.0, 2.0}}))(0, 0) == 8.0);

    Matrix m = testutil::gaussian_blob(30, 7, 22);
    Matrix g1 = gram(m, 1);
    Matrix g64 = gram(m, 64);
    Matrix g5 = gram(m, 5);
    CHECK(max_abs_diff(g1, g64) <= 1e-10);
    CHECK(g1 == g5); // fixed-order sums are bit-identical across tilings
    CHECK(g1 == gram(m, 7, 2));
}

TEST_CASE("pairwise_sq_dist examples") {
    Matrix pts = Matrix::from_rows({{0.0}, {3.0}});
    DistanceMatrix d = pairwise_sq_dist(pts);
    CHECK(d.d2(0, 1) == 9.0);
    CHECK(d.d2(1, 0) == 9.0);
    CHECK(d.d2(0, 0) == 0.0);

    Matrix dup = Matrix::from_rows({{1.5, -2.0}, {1.5, -2.0}, {0.0, 0.0}});
    DistanceMatrix dd = pairwise_sq_dist(dup);
    CHECK(dd.d2(0, 1) == 0.0);
    CHECK(dd.d2(0, 2) > 0.0);
}

TEST_CASE("naive oracle examples") {
    DistanceMatrix one = pairwise_sq_dist_naive(testutil::gaussian_blob(1, 6, 23));
    CHECK(one.n == 1);
    CHECK(one.d2(0, 0) == 0.0);

    Matrix pts = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}});
    CHECK(pairwise_sq_dist_naive(pts).d2(0, 1) == 2.0);
}

TEST_CASE("decomposed path equals the naive oracle") {
    Rng rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 10 + rng.index(31);
        std::size_t d = 1 + rng.index(12);
        Matrix m = testutil::gaussian_blob(n, d, 1000 + trial);
        DistanceMatrix fast = pairwise_sq_dist(m);
        DistanceMatrix slow = pairwise_sq_dist_naive(m);
        CHECK(max_abs_diff(fast.d2, slow.d2) <= 1e-8);
    }
}

TEST_CASE("distance matrix invariants") {
    Matrix m = testutil::gaussian_blob(40, 12, 25);
    DistanceMatrix d = pairwise_sq_dist(m);
    for (std::size_t i = 0; i < d.n; ++i) {
        CHECK(d.d2(i, i) == 0.0);
        for (std::size_t j = 0; j < d.n; ++j) {
            CHECK(d.d2(i, j) >= 0.0);
            CHECK(std::fabs(d.d2(i, j) - d.d2(j, i)) <= 1e-9);
        }
    }

    // Triangle inequality on the square roots, over random triples.
    Rng rng(26);
    for (int t = 0; t < 500; ++t) {
        std::size_t i = rng.index(d.n), j = rng.index(d.n), k = rng.index(d.n);
        CHECK(std::sqrt(d.d2(i, k)) <=
              std::sqrt(d.d2(i, j)) + std::sqrt(d.d2(j, k)) + 1e-6);
    }
}

TEST_CASE("row permutation permutes both axes") {
    Matrix m = testutil::gaussian_blob(15, 4, 27);
    std::vector<std::size_t> perm(m.rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(28);
    for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.index(i)]);
    }
    Matrix permuted(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = 0; k < m.cols(); ++k) permuted(i, k) = m(perm[i], k);
    }
    DistanceMatrix base = pairwise_sq_dist(m);
    DistanceMatrix shuffled = pairwise_sq_dist(permuted);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.rows(); ++j) {
            CHECK(shuffled.d2(i, j) == doctest::Approx(base.d2(perm[i], perm[j])).epsilon(1e-12));
        }
    }
}

TEST_CASE("assembly rejects cancellation beyond the clamp window") {
    // Slightly negative round-off is clamped...
    std::vector<double> norms{1.0, 1.0};
    Matrix g = Matrix::from_rows({{1.0, 1.0 + 1e-8}, {1.0 + 1e-8, 1.0}});
    DistanceMatrix d = assemble_sq_dist(norms, g);
    CHECK(d.d2(0, 1) == 0.0);

    // ...while inconsistent inputs are an internal error.
    Matrix bad = Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}});
    CHECK_THROWS_AS(assemble_sq_dist(norms, bad), InternalError);
}
