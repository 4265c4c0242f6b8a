#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <string>

#include "sfe/dynamics.hpp"
#include "sfe/errors.hpp"

using namespace sfe;

namespace {
const std::string kScen = SFE_SCENARIO_DIR;
Scenario scen(const char* name) { return load_scenario(kScen + "/" + name); }

DispersionInputs random_inputs(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-3, 3), pos(0.1, 5);
    DispersionInputs in;
    in.k = u(rng);
    in.l = u(rng);
    in.m = u(rng);
    in.n = u(rng);
    in.K = pos(rng);
    in.R = pos(rng);
    in.dR = u(rng);
    in.d2R = u(rng);
    return in;
}
}  // namespace

TEST_CASE("C family identities") {
    Scenario s = scen("bump.sfe");
    DynCoeffs c = c_family(s, 0.7, -2.0, 0.0);
    CHECK(c.c1 == 0.0);
    CHECK(c.c2 == doctest::Approx(std::log(1.2)));
    CHECK(c.c3 == doctest::Approx(1 + 2.2 * std::log(1.2)));
    DynCoeffs d = c_family(s, 0.7, -2.0, 3.0);
    CHECK(d.c1 == doctest::Approx(s.params.sigma_x2 * s.params.sigma_khat2 * 1.44 * 9 / (96 * 8)));
}

TEST_CASE("dispersion: residual, root choice and damping sign on random inputs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ug(0.01, 30), uc(-2, 2);
    ExpectationParams e;
    for (int n = 0; n < 500; ++n) {
        DispersionInputs in = random_inputs(rng);
        e.c_t = uc(rng);
        e.a0 = uc(rng);
        double G = ug(rng);
        auto om = frequency(in, G, e);
        CHECK(determinant_residual(in, om, G, e) <= 1e-10);
        // Im Omega > 0 exactly when the damping left-hand side is positive
        CHECK((om.imag() > 0) == (damping_lhs(in, G, e) > 0));
        CHECK((om.imag() > 0) == damping_condition(in, G, e));
    }
}

TEST_CASE("dispersion: full kernel keeps the residual small") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1, 1), ug(0.01, 10);
    DynOptions full{true};
    for (int n = 0; n < 300; ++n) {
        DispersionInputs in = random_inputs(rng);
        ExpectationParams e;
        e.b_x2 = u(rng);
        e.d_t2 = u(rng);
        e.f_x2 = u(rng);
        e.h_t2 = u(rng);
        e.u_xt = u(rng);
        e.v_xt = u(rng);
        double G = ug(rng);
        auto om = frequency(in, G, e, full);
        CHECK(determinant_residual(in, om, G, e, full) <= 1e-10);
    }
    // with every second-order entry at zero the full kernel reduces to the first-order root
    for (int n = 0; n < 50; ++n) {
        DispersionInputs in = random_inputs(rng);
        ExpectationParams e;
        double G = ug(rng);
        auto a = frequency(in, G, e, full), b = frequency(in, G, e);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
    }
}

TEST_CASE("dispersion: singular system") {
    DispersionInputs in;
    in.k = 1;
    in.l = 0;
    in.m = 0;
    in.K = 1;
    in.R = 1;
    in.dR = 1;
    ExpectationParams e;
    CHECK_THROWS_AS(frequency(in, 1.0, e), SingularError);
    CHECK_THROWS_AS(damping_condition(in, 1.0, e), SingularError);
}

TEST_CASE("exact threshold is where the damping side changes sign") {
    std::mt19937_64 rng(29);
    ExpectationParams e;
    int seen = 0;
    for (int n = 0; n < 400; ++n) {
        DispersionInputs in = random_inputs(rng);
        double g2 = exact_threshold_g2(in, e);
        if (std::isnan(g2)) continue;
        ++seen;
        double lo = damping_lhs(in, std::sqrt(0.99 * g2), e), hi = damping_lhs(in, std::sqrt(1.01 * g2), e);
        CHECK(lo * hi < 0);
        CHECK(std::abs(damping_lhs(in, std::sqrt(g2), e)) < 1e-9 * (std::abs(lo) + std::abs(hi)));
    }
    CHECK(seen > 50);
}

TEST_CASE("G = 0 gives a purely imaginary frequency") {
    Scenario s = scen("bump.sfe");
    FieldSolution sol = solve_collective_state(s);
    DynamicsReport r = regime_analysis(s, sol, s.expectations, parse_g_range("0:0:1"));
    for (int i = 0; i < s.size(); ++i) {
        if (r.regime[i] == Regime::deserted) continue;
        CHECK(r.omega[i][0].real() == 0.0);
    }
}

TEST_CASE("g-range parsing") {
    CHECK(parse_g_range("0:0:1") == std::vector<double>{0.0});
    auto g = parse_g_range("0.01:100:5");
    REQUIRE(g.size() == 5);
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(g[4] == doctest::Approx(100.0));
    auto lin = parse_g_range("0:4:5");
    CHECK(lin[1] == doctest::Approx(1.0));
    for (const char* bad : {"", "1:2", "a:b:c", "1:2:0", "2:1:3", "1:2:3:4", "1:2:x"})
        CHECK_THROWS_AS(parse_g_range(bad), DomainError);
    auto d = default_g_range();
    CHECK(d.size() == 32);
    CHECK(d.front() == doctest::Approx(1e-3));
    CHECK(d.back() == doctest::Approx(1e2));
}

TEST_CASE("uniform state: price term vanishes and the system is singular") {
    Scenario s = scen("uniform.sfe");
    FieldSolution sol = solve_collective_state(s);
    DynCoeffs c = dyn_coefficients(s, sol, 0);
    CHECK(std::abs(c.l) < 1e-15);
    CHECK_THROWS_AS(damping_condition(s, sol, 0, 1.0, s.expectations), SingularError);
}

TEST_CASE("small-capital regime: reactive expectations destabilize") {
    Scenario s = scen("small_capital.sfe");
    FieldSolution sol = solve_collective_state(s);
    ExpectationParams up = s.expectations, down = s.expectations;
    up.c_t = 1;
    down.c_t = -1;
    auto g = default_g_range();
    DynamicsReport ru = regime_analysis(s, sol, up, g), rd = regime_analysis(s, sol, down, g);
    int valid = 0;
    for (int i = 0; i < s.size(); ++i) {
        if (ru.regime[i] != Regime::k_small || !ru.regime_valid[i]) continue;
        ++valid;
        for (size_t j = 0; j < g.size(); ++j) {
            CHECK_FALSE(ru.regime_verdict[i][j]);
            CHECK_FALSE(ru.damped[i][j]);
            CHECK(rd.regime_verdict[i][j]);
            CHECK(rd.damped[i][j]);
        }
    }
    CHECK(valid >= 3);
}

TEST_CASE("intermediate regime: approximate threshold tracks the exact one") {
    Scenario s = scen("intermediate.sfe");
    FieldSolution sol = solve_collective_state(s);
    ExpectationParams e = s.expectations;
    e.c_t = -1;
    int valid = 0;
    for (int i = 0; i < s.size(); ++i) {
        if (regime_of(s, sol, i) != Regime::intermediate || !regime_valid(s, sol, i, Regime::intermediate)) continue;
        if (!(stc_condition(s, sol, i, e) < 0)) continue;
        ++valid;
        DispersionInputs in = dispersion_inputs(s, sol, i);
        double exact = exact_threshold_g2(in, e), stc = stc_threshold_g2(s, sol, i, e);
        CHECK(std::abs(stc / exact - 1) < 0.01);
        CHECK(damping_condition(in, std::sqrt(0.99 * stc), e) != damping_condition(in, std::sqrt(1.01 * stc), e));
    }
    CHECK(valid >= 2);
}

TEST_CASE("report formats") {
    Scenario s = scen("bump.sfe");
    FieldSolution sol = solve_collective_state(s);
    auto g = parse_g_range("0.1:10:3");
    DynamicsReport r = regime_analysis(s, sol, s.expectations, g);
    std::string csv = dynamics_csv(s, r);
    CHECK(csv.rfind("x,G,re_omega,im_omega,damped,regime\n", 0) == 0);
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 1 + 3 * s.size());
    auto j = nlohmann::json::parse(dynamics_json(s, r));
    CHECK(j["n_g"] == 3);
    CHECK(j["sectors"].size() == size_t(s.size()));
    for (int i = 0; i < s.size(); ++i) CHECK(r.max_residual[i] <= 1e-10);
}
