#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "glad/random.hpp"

using namespace glad;

TEST_CASE("streams are reproducible and distinct") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng d(123);
    CHECK(d.next_u64() != c.next_u64());
    CHECK(derive_seed(42, {kStreamFolds}) != derive_seed(42, {kStreamHoldout}));
    CHECK(derive_seed(42, {1}) != derive_seed(42, {2}));
    CHECK(derive_seed(42, {kStreamBootstrap, 3}) == derive_seed(42, {kStreamBootstrap, 3}));
    CHECK(stream_tag("folds") == kStreamFolds);
}

TEST_CASE("uniform draws") {
    Rng rng(9);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal draws have unit moments") {
    Rng rng(11);
    const int n = 50000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.02);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(3);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
    CHECK_FALSE(std::is_sorted(v.begin(), v.end()));
}
