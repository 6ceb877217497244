#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fliu/rng.hpp"

using namespace fliu;

TEST_CASE("splitmix64 matches the reference sequence", "[rng]") {
    // First outputs of the reference splitmix64 seeded with 0.
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("derive_seed is stable and label-sensitive", "[rng]") {
    const uint64_t a = derive_seed(42, "rep", uint64_t{0}, "partition");
    const uint64_t b = derive_seed(42, "rep", uint64_t{0}, "partition");
    CHECK(a == b);

    CHECK(derive_seed(42, "rep", uint64_t{1}, "partition") != a);
    CHECK(derive_seed(43, "rep", uint64_t{0}, "partition") != a);
    CHECK(derive_seed(42, "rep", uint64_t{0}, "init") != a);

    // Pinned test vector for the chosen hash; a change here breaks replay of
    // every previously recorded experiment.
    CHECK(a == 724291792153399785ULL);
}

TEST_CASE("uniform stays in [0,1) and is deterministic", "[rng]") {
    Rng r1(123), r2(123);
    for (int i = 0; i < 1000; ++i) {
        const double u = r1.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == r2.uniform());
    }
}

TEST_CASE("uniform_below is bounded and roughly uniform", "[rng]") {
    Rng rng(7);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 100000; ++i) {
        const uint64_t v = rng.uniform_below(10);
        REQUIRE(v < 10);
        hits[v]++;
    }
    for (int h : hits) {
        CHECK(h > 9000);
        CHECK(h < 11000);
    }
    CHECK_THROWS_AS(rng.uniform_below(0), InvalidArgumentError);
}

TEST_CASE("normal has zero mean and unit variance", "[rng]") {
    Rng rng(99);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("gamma sampler matches its mean and variance", "[rng]") {
    Rng rng(5);
    for (double shape : {0.5, 1.0, 3.7, 20.0}) {
        double sum = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) sum += rng.gamma(shape);
        const double mean = sum / n;
        CHECK(std::abs(mean - shape) < 0.05 * shape + 0.02);
    }
    CHECK_THROWS_AS(rng.gamma(0.0), InvalidArgumentError);
    CHECK_THROWS_AS(rng.gamma(-1.0), InvalidArgumentError);
}

TEST_CASE("shuffle and permutation are deterministic bijections", "[rng]") {
    Rng r1(11), r2(11);
    const auto p1 = r1.permutation(100);
    const auto p2 = r2.permutation(100);
    CHECK(p1 == p2);
    std::set<uint32_t> unique(p1.begin(), p1.end());
    CHECK(unique.size() == 100);
    CHECK(*unique.begin() == 0);
    CHECK(*unique.rbegin() == 99);

    Rng r3(12);
    const auto p3 = r3.permutation(100);
    CHECK(p3 != p1);
}
