#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fliu/rng.hpp"
#include "fliu/sinkhorn.hpp"

using namespace fliu;

namespace {

Matrix make2x2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m.at(0, 0) = a;
    m.at(0, 1) = b;
    m.at(1, 0) = c;
    m.at(1, 1) = d;
    return m;
}

} // namespace

TEST_CASE("sinkhorn leaves a fitted matrix unchanged", "[sinkhorn]") {
    const auto fitted = sinkhorn_knopp(make2x2(0.3, 0.7, 0.7, 0.3), 1.0, 1.0);
    CHECK(std::abs(fitted.entries.at(0, 0) - 0.3) < 1e-12);
    CHECK(std::abs(fitted.entries.at(0, 1) - 0.7) < 1e-12);
    CHECK(std::abs(fitted.entries.at(1, 0) - 0.7) < 1e-12);
    CHECK(std::abs(fitted.entries.at(1, 1) - 0.3) < 1e-12);
    CHECK(fitted.iterations <= 1);
}

TEST_CASE("sinkhorn normalizes the flat matrix to half everywhere", "[sinkhorn]") {
    const auto fitted = sinkhorn_knopp(make2x2(1, 1, 1, 1), 1.0, 1.0);
    for (size_t r = 0; r < 2; ++r) {
        for (size_t c = 0; c < 2; ++c) CHECK(std::abs(fitted.entries.at(r, c) - 0.5) < 1e-12);
    }
}

TEST_CASE("sinkhorn matches the iterative proportional fitting oracle", "[sinkhorn]") {
    // Oracle: alternating row/column normalization of ((2,1),(1,2)) run to
    // 1e-14 in a scratch script converges to ((2/3,1/3),(1/3,2/3)).
    const auto fitted = sinkhorn_knopp(make2x2(2, 1, 1, 2), 1.0, 1.0, 1e-10);
    CHECK(std::abs(fitted.entries.at(0, 0) - 2.0 / 3.0) < 1e-8);
    CHECK(std::abs(fitted.entries.at(0, 1) - 1.0 / 3.0) < 1e-8);
    CHECK(std::abs(fitted.entries.at(1, 0) - 1.0 / 3.0) < 1e-8);
    CHECK(std::abs(fitted.entries.at(1, 1) - 2.0 / 3.0) < 1e-8);
    for (size_t r = 0; r < 2; ++r) CHECK(std::abs(fitted.entries.row_sum(r) - 1.0) < 1e-10);
    for (size_t c = 0; c < 2; ++c) CHECK(std::abs(fitted.entries.col_sum(c) - 1.0) < 1e-10);
}

TEST_CASE("sinkhorn rejects inconsistent targets and bad matrices", "[sinkhorn]") {
    CHECK_THROWS_AS(sinkhorn_knopp(make2x2(1, 1, 1, 1), 1.0, 2.0), InvalidArgumentError);
    CHECK_THROWS_AS(sinkhorn_knopp(make2x2(1, 0, 1, 1), 1.0, 1.0), InvalidArgumentError);
    CHECK_THROWS_AS(sinkhorn_knopp(make2x2(1, -1, 1, 1), 1.0, 1.0), InvalidArgumentError);
}

TEST_CASE("sinkhorn reports failure to converge", "[sinkhorn]") {
    // asymmetric start: one sweep leaves the marginals visibly off
    CHECK_THROWS_AS(sinkhorn_knopp(make2x2(1, 2, 1, 1), 1.0, 1.0, 1e-12, 1), ConvergenceError);
    // the same fit succeeds once the iteration budget is realistic
    CHECK_NOTHROW(sinkhorn_knopp(make2x2(1, 2, 1, 1), 1.0, 1.0, 1e-12, 1000));
}

TEST_CASE("ipf_fit reaches arbitrary positive marginals", "[sinkhorn]") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(6, 4);
        for (auto& v : m.data) v = std::exp(rng.normal());
        std::vector<double> rows(6), cols(4);
        double total = 0.0;
        for (auto& r : rows) {
            r = 0.5 + rng.uniform();
            total += r;
        }
        double csum = 0.0;
        for (size_t j = 0; j < 4; ++j) {
            cols[j] = 0.5 + rng.uniform();
            csum += cols[j];
        }
        for (auto& c : cols) c *= total / csum;  // consistent totals

        const auto fitted = ipf_fit(m, rows, cols, 1e-10);
        for (size_t r = 0; r < 6; ++r) CHECK(std::abs(fitted.entries.row_sum(r) - rows[r]) < 1e-10);
        for (size_t c = 0; c < 4; ++c) CHECK(std::abs(fitted.entries.col_sum(c) - cols[c]) < 1e-10);
        CHECK(fitted.achieved_deviation < 1e-10);
    }
}

TEST_CASE("largest_remainder is exact with lower-index tie break", "[sinkhorn]") {
    const auto c = largest_remainder({0.5, 0.5}, 101);
    CHECK(c[0] == 51);
    CHECK(c[1] == 50);

    const auto d = largest_remainder({1.0, 0.0}, 7);
    CHECK(d[0] == 7);
    CHECK(d[1] == 0);

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> share(8);
        for (auto& s : share) s = rng.uniform() + 1e-6;
        const int64_t total = static_cast<int64_t>(rng.uniform_below(10000)) + 1;
        const auto counts = largest_remainder(share, total);
        int64_t sum = 0;
        double share_sum = 0.0;
        for (double s : share) share_sum += s;
        for (size_t i = 0; i < counts.size(); ++i) {
            sum += counts[i];
            const double ideal = share[i] / share_sum * static_cast<double>(total);
            CHECK(std::abs(static_cast<double>(counts[i]) - ideal) < 1.0);
        }
        CHECK(sum == total);
    }
}

TEST_CASE("allocate_counts hits every class count exactly", "[sinkhorn]") {
    SECTION("worked examples") {
        DistributionMatrix fitted;
        fitted.entries = make2x2(0.5, 1.0, 0.5, 0.0);
        const auto counts = allocate_counts(fitted, {101, 7});
        CHECK(counts[0][0] == 51);
        CHECK(counts[1][0] == 50);
        CHECK(counts[0][1] == 7);
        CHECK(counts[1][1] == 0);
    }
    SECTION("property: 100 random column-stochastic 10x10 matrices") {
        Rng rng(1234);
        for (int trial = 0; trial < 100; ++trial) {
            DistributionMatrix fitted;
            fitted.entries = Matrix(10, 10);
            for (size_t j = 0; j < 10; ++j) {
                double col_sum = 0.0;
                for (size_t k = 0; k < 10; ++k) {
                    fitted.entries.at(k, j) = rng.uniform() + 1e-9;
                    col_sum += fitted.entries.at(k, j);
                }
                for (size_t k = 0; k < 10; ++k) fitted.entries.at(k, j) /= col_sum;
            }
            const std::vector<int64_t> class_counts(10, 6000);
            const auto counts = allocate_counts(fitted, class_counts);
            for (size_t j = 0; j < 10; ++j) {
                int64_t col = 0;
                for (size_t k = 0; k < 10; ++k) {
                    col += counts[k][j];
                    CHECK(std::abs(static_cast<double>(counts[k][j]) -
                                   fitted.entries.at(k, j) * 6000.0) < 1.0);
                }
                CHECK(col == 6000);
            }
        }
    }
}
