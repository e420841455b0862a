#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "ybsim/rng.hpp"

using namespace ybsim;

TEST_CASE("streams are deterministic and independent") {
    RngStream a(42, RngPurpose::trajectory, 7);
    RngStream b(42, RngPurpose::trajectory, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, RngPurpose::trajectory, 8);
    RngStream d(42, RngPurpose::detection, 7);
    RngStream e(43, RngPurpose::trajectory, 7);
    RngStream f(42, RngPurpose::trajectory, 7);
    CHECK(c.next_u64() != f.next_u64());
    CHECK(d.next_u64() != RngStream(42, RngPurpose::trajectory, 7).next_u64());
    CHECK(e.next_u64() != RngStream(42, RngPurpose::trajectory, 7).next_u64());
}

TEST_CASE("exponential and normal sample moments") {
    RngStream rng(1, RngPurpose::bootstrap, 1);
    const int n = 200000;
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += rng.exponential(5.0);
    CHECK(sum / n == doctest::Approx(0.2).epsilon(0.01));

    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 2.0);
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
    CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("poisson sampling matches mean and variance") {
    for (double lambda : {0.15, 4.0, 80.0, 1500.0}) {
        RngStream rng(7, RngPurpose::bin_noise, static_cast<int>(lambda * 10));
        const int n = 100000;
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(rng.poisson(lambda));
            s1 += x;
            s2 += x * x;
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        CHECK(mean == doctest::Approx(lambda).epsilon(0.02));
        CHECK(var == doctest::Approx(lambda).epsilon(0.03));
    }
}

TEST_CASE("uniform_pos never returns zero") {
    RngStream rng(3, RngPurpose::bootstrap, 2);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform_pos();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}
