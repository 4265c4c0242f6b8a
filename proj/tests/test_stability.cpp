#include <doctest.h>

#include <cmath>
#include <string>

#include "sfe/errors.hpp"
#include "sfe/stability.hpp"

using namespace sfe;

namespace {
const std::string kScen = SFE_SCENARIO_DIR;
Scenario scen(const char* name) { return load_scenario(kScen + "/" + name); }
}  // namespace

TEST_CASE("uniform state has a single pattern") {
    Scenario s = scen("uniform.sfe");
    FieldSolution sol = solve_collective_state(s);
    StabilityReport r = classify(s, sol);
    for (int i = 0; i < s.size(); ++i) {
        CHECK(r.pattern[i] == r.pattern[0]);
        CHECK(r.stab_denom[i] == doctest::Approx(r.stab_denom[0]).epsilon(1e-12));
    }
}

TEST_CASE("b_crit and the denominator are complementary") {
    for (const char* f : {"bump.sfe", "cosine.sfe", "small_capital.sfe"}) {
        Scenario s = scen(f);
        FieldSolution sol = solve_collective_state(s);
        StabilityReport r = classify(s, sol);
        for (int i = 0; i < s.size(); ++i) {
            if (sol.deserted[i]) {
                CHECK(r.pattern[i] == Pattern::deserted);
                continue;
            }
            CHECK(r.b_crit[i] + r.stab_denom[i] == doctest::Approx(1.0));
            CHECK(r.stab_denom[i] == doctest::Approx(local_denominator(s, sol, i)));
            if (r.stab_denom[i] < 0) CHECK(r.pattern[i] == Pattern::pattern3_unstable);
        }
    }
}

TEST_CASE("linear map rule") {
    CHECK(iterate_linear_map(0.5, 0.01) == MapVerdict::converges);
    CHECK(iterate_linear_map(-0.9, 0.01) == MapVerdict::converges);
    CHECK(iterate_linear_map(0.999, 0.01) == MapVerdict::converges);
    CHECK(iterate_linear_map(1.01, 0.01) == MapVerdict::diverges);
    CHECK(iterate_linear_map(-1.5, 0.01) == MapVerdict::diverges);
    CHECK(iterate_linear_map(3.0, 0.0) == MapVerdict::converges);
}

TEST_CASE("nonlinear map check agrees with the denominator sign where |mu| < 1") {
    for (const char* f : {"bump.sfe", "cosine.sfe", "small_capital.sfe", "intermediate.sfe"}) {
        Scenario s = scen(f);
        FieldSolution sol = solve_collective_state(s);
        for (int i = 0; i < s.size(); ++i) {
            if (sol.deserted[i]) continue;
            double mu = local_multiplier(s, sol, i);
            if (mu <= -1) continue;
            MapVerdict expect = local_denominator(s, sol, i) > 0 ? MapVerdict::converges : MapVerdict::diverges;
            for (double sign : {1.0, -1.0})
                CHECK(iterate_map_check(s, sol, i, sign * 0.005 * sol.k_x[i]) == expect);
        }
    }
}

TEST_CASE("map check refuses large perturbations and deserted sectors") {
    Scenario s = scen("bump.sfe");
    FieldSolution sol = solve_collective_state(s);
    CHECK_THROWS_AS(iterate_map_check(s, sol, 0, 0.02 * sol.k_x[0]), DomainError);
    sol.deserted[0] = 1;
    CHECK_THROWS_AS(local_denominator(s, sol, 0), DomainError);
}

TEST_CASE("closed-form sensitivities match perturb-and-resolve") {
    for (const char* f : {"bump.sfe", "cosine.sfe", "small_capital.sfe"}) {
        Scenario s = scen(f);
        FieldSolution sol = solve_collective_state(s);
        for (int i = 0; i < s.size(); ++i) {
            if (sol.deserted[i] || std::abs(local_denominator(s, sol, i)) <= 0.1) continue;
            for (SensParam p : {SensParam::relative_return_Y, SensParam::short_term_f_param}) {
                double a = sensitivity(s, sol, i, p);
                double b = sensitivity_oracle(s, sol, i, p);
                INFO(f, " sector ", i, " ", to_string(p));
                CHECK(std::abs(a - b) <= 0.05 * std::abs(b) + 1e-12);
            }
        }
    }
}

TEST_CASE("sensitivity columns in the report and CSV") {
    Scenario s = scen("bump.sfe");
    FieldSolution sol = solve_collective_state(s);
    ClassifyOptions o;
    o.with_sensitivities = true;
    StabilityReport r = classify(s, sol, o);
    CHECK(r.sensitivities.size() == 2);
    std::string csv = stability_csv(s, r);
    CHECK(csv.rfind("x,stab_denom,b_crit,pattern,dk_d_relative_return_Y,dk_d_short_term_f_param\n", 0) == 0);
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == s.size() + 1);
}
