#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sfe/errors.hpp"
#include "sfe/specfun.hpp"

using namespace sfe;
using doctest::Approx;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST_CASE("gamma: identities and oracle values") {
    CHECK(rel(sfe::gamma(0.5), std::sqrt(std::numbers::pi)) < 1e-14);
    CHECK(rel(sfe::gamma(5.0), 24.0) < 1e-14);
    CHECK(rel(sfe::gamma(-0.3), oracle::gamma_m0p3) < 1e-12);
    CHECK(rel(sfe::gamma(7.25), oracle::gamma_7p25) < 1e-12);
    CHECK(rel(sfe::gamma(-2.5), oracle::gamma_m2p5) < 1e-12);
    CHECK(rel(sfe::gamma(29.5), oracle::gamma_29p5) < 1e-12);
    CHECK(rel(sfe::gamma(0.001), oracle::gamma_0p001) < 1e-12);
}

TEST_CASE("gamma: poles") {
    CHECK_THROWS_AS(sfe::gamma(0.0), PoleError);
    CHECK_THROWS_AS(sfe::gamma(-3.0), PoleError);
}

TEST_CASE("gamma: recurrence x G(x) = G(x+1)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-9.5, 25.0);
    for (int n = 0; n < 200; ++n) {
        double x = u(rng);
        if (std::abs(x - std::round(x)) < 1e-3) continue;
        CHECK(rel(x * sfe::gamma(x), sfe::gamma(x + 1)) < 1e-12);
    }
}

TEST_CASE("digamma: constants and oracle values") {
    CHECK(rel(digamma(1.0), -kEulerGamma) < 1e-12);
    CHECK(rel(digamma(0.5), -kEulerGamma - 2 * std::numbers::ln2) < 1e-12);
    CHECK(rel(digamma(3.7), oracle::digamma_3p7) < 1e-10);
    CHECK(rel(digamma(-0.5), oracle::digamma_m0p5) < 1e-10);
    CHECK(rel(digamma(0.1), oracle::digamma_0p1) < 1e-10);
    CHECK(rel(digamma(25.0), oracle::digamma_25) < 1e-10);
    CHECK_THROWS_AS(digamma(-2.0), PoleError);
}

TEST_CASE("lambert_w: values, residuals, domains") {
    CHECK(lambert_w(0, 0.0) == 0.0);
    CHECK(std::abs(lambert_w(0, std::numbers::e) - 1.0) < 1e-14);
    CHECK(std::abs(lambert_w(0, -0.3) - oracle::w0_m0p3) < 1e-13);
    CHECK(std::abs(lambert_w(-1, -0.3) - oracle::wm1_m0p3) < 1e-13);
    CHECK(std::abs(lambert_w(0, 10.0) - oracle::w0_10) < 1e-13);
    CHECK(rel(lambert_w(-1, -1e-5), oracle::wm1_m1e_5) < 1e-13);
    CHECK(std::abs(lambert_w(0, -std::exp(-1.0)) + 1.0) < 1e-7);
    CHECK_THROWS_AS(lambert_w(0, -0.5), DomainError);
    CHECK_THROWS_AS(lambert_w(-1, 0.1), DomainError);
    CHECK_THROWS_AS(lambert_w(1, 0.1), DomainError);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-std::exp(-1.0), 50.0);
    for (int n = 0; n < 500; ++n) {
        double x = u(rng);
        double w = lambert_w(0, x);
        CHECK(std::abs(w * std::exp(w) - x) <= 1e-12 * std::max(1.0, std::abs(x)));
        CHECK(w >= -1.0);
        if (x < 0) {
            double v = lambert_w(-1, x);
            CHECK(std::abs(v * std::exp(v) - x) <= 1e-12);
            CHECK(v <= -1.0);
        }
    }
}

TEST_CASE("pcf_d: elementary orders") {
    for (double z : {0.0, 0.7, 2.0, 5.0, 9.0}) {
        CHECK(std::abs(pcf_d(0, z) - std::exp(-z * z / 4)) < 1e-12);
        CHECK(std::abs(pcf_d(1, z) - z * std::exp(-z * z / 4)) < 1e-12);
    }
    CHECK(std::abs(pcf_d(0, 2) - std::exp(-1.0)) < 1e-12);
    CHECK(std::abs(pcf_d(1, 1) - std::exp(-0.25)) < 1e-12);
}

TEST_CASE("pcf_d: oracle values") {
    for (const auto& pt : oracle::pcf_points) {
        INFO("p=", pt.p, " z=", pt.z);
        CHECK(rel(pcf_d(pt.p, pt.z), pt.d) < 1e-10);
    }
}

TEST_CASE("pcf_d: three-term recurrence on random points") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> up(-3, 3), uz(0, 6);
    for (int n = 0; n < 200; ++n) {
        double p = up(rng), z = uz(rng);
        double lhs = pcf_d(p + 1, z) - z * pcf_d(p, z) + p * pcf_d(p - 1, z);
        double scale = std::abs(pcf_d(p + 1, z)) + std::abs(z * pcf_d(p, z)) + std::abs(p * pcf_d(p - 1, z));
        CHECK(std::abs(lhs) <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("pcf_moments: closed form against mpmath quadrature") {
    for (const auto& pt : oracle::moment_points) {
        INFO("p=", pt.p);
        PcfMoment m = pcf_moments_any(pt.p);
        CHECK(rel(m.zeroth, pt.zeroth) < 1e-9);
        CHECK(rel(m.first, pt.first) < 1e-9);
        PcfMoment q = pcf_moments_quad(pt.p);
        CHECK(rel(q.zeroth, pt.zeroth) < 1e-9);
        CHECK(rel(q.first, pt.first) < 1e-9);
    }
    CHECK(rel(pcf_moments_any(0.0).zeroth, std::sqrt(std::numbers::pi / 2)) < 1e-10);
}

TEST_CASE("pcf_moments: pole policy") {
    CHECK_THROWS_AS(pcf_moments(0.0), PoleError);
    CHECK_THROWS_AS(pcf_moments(1.0), PoleError);
    CHECK_NOTHROW(pcf_moments(-0.5));
}

TEST_CASE("pcf_moments: positivity and log forms") {
    for (double p = -2.9; p < 4.0; p += 0.173) {
        PcfMoment q = pcf_moments_quad(p);
        CHECK(q.zeroth > 0);
        CHECK(q.first > 0);
        LogMoment l = pcf_log_moments(p);
        CHECK(std::abs(l.log_zeroth - std::log(q.zeroth)) < 1e-9);
        CHECK(std::abs(l.log_first - std::log(q.first)) < 1e-9);
    }
}

TEST_CASE("solve_power_exp: examples and domain") {
    CHECK(std::abs(solve_power_exp(1, 0, 5) - 5) < 1e-12);
    CHECK(std::abs(solve_power_exp(2, 1, std::exp(-1.0)) - 1) < 1e-10);
    CHECK(rel(solve_power_exp(2.5, 0.7, 0.2), oracle::power_exp_2p5_0p7_0p2) < 1e-10);
    CHECK_THROWS_AS(solve_power_exp(2, 1, 10.0), DomainError);
    CHECK_THROWS_AS(solve_power_exp(-1, 1, 0.1), DomainError);
    CHECK_THROWS_AS(solve_power_exp(1, 1, -0.1), DomainError);
}

TEST_CASE("solve_power_exp: substitution residual on random instances") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(0.2, 4.0), ua(0.0, 3.0), uf(0.01, 0.99);
    for (int n = 0; n < 200; ++n) {
        double d = ud(rng), a = ua(rng);
        // largest c with a branch-0 root is (d/(a e))^d
        double cmax = a > 0 ? std::pow(d / (a * std::numbers::e), d) : 10.0;
        double c = uf(rng) * cmax;
        double x = solve_power_exp(d, a, c);
        CHECK(x > 0);
        CHECK(std::abs(std::pow(x, d) * std::exp(-a * x) - c) <= 1e-10 * c);
        if (a > 0) CHECK(x <= d / a * (1 + 1e-9));
    }
}

TEST_CASE("integrate: known integrals") {
    CHECK(rel(integrate([](double x) { return std::exp(-x * x); }, 0, 10), std::sqrt(std::numbers::pi) / 2) < 1e-13);
    CHECK(rel(integrate([](double x) { return std::sin(x); }, 0, std::numbers::pi), 2.0) < 1e-13);
}
