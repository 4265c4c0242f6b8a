#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "sfe/errors.hpp"
#include "sfe/scenario.hpp"

using namespace sfe;

namespace {

const std::string kScen = SFE_SCENARIO_DIR;

std::string minimal(const std::string& landscape = "r_values = 1, 2, 3, 2\n", const std::string& extra = "") {
    return "[grid]\nn_sectors = 4\nx_min = 0\nx_max = 2\nboundary = periodic\n"
           "[params]\nalpha = 0.5\nb = 0.5\ngamma = 0.2\nepsilon = 0.5\ntau = 1\nnu = 0.5\na_f0 = 0.5\n"
           "varsigma = 1\neta = 0.3\nsigma_x2 = 1e-4\nsigma_k2 = 1\nsigma_xhat2 = 1\nsigma_khat2 = 1\n"
           "n_firms = 100\nn_investors = 400\nf2_exponent = 1\ninclude_F_correction = false\n" +
           extra + "[expectations]\na0 = 1\nb_x2 = 0\nc_t = 1\nd_t2 = 0\nf_x2 = 0\nh_t2 = 0\nu_xt = 0\nv_xt = 0\n"
                   "[landscape]\n" +
           landscape;
}

std::string field_of(const std::string& text) {
    try {
        validate(parse_scenario(text));
    } catch (const ValidationError& e) {
        return e.field;
    }
    return "";
}

}  // namespace

TEST_CASE("grid geometry and wrapping") {
    SectorGrid g{8, -1.0, 3.0, Boundary::periodic};
    CHECK(g.spacing() == 0.5);
    CHECK(g.volume() == 4.0);
    CHECK(g.center(0) == -0.75);
    CHECK(g.wrap(-1) == 7);
    CHECK(g.wrap(8) == 0);
    CHECK(g.wrap(17) == 1);
    g.boundary = Boundary::reflecting;
    CHECK(g.wrap(-1) == 0);
    CHECK(g.wrap(8) == 7);
}

TEST_CASE("parse explicit r_values and defaults") {
    Scenario s = parse_scenario(minimal());
    CHECK(s.size() == 4);
    CHECK(s.landscape.r_values == std::vector<double>{1, 2, 3, 2});
    CHECK(s.params.productivity == 1.0);
    CHECK(s.productivity(2) == 1.0);
    CHECK_NOTHROW(validate(s));
}

TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_AS(parse_scenario("[grid]\nn_sectors 4\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario(minimal("r_values = 1, 2, 3, 2\n", "bogus = 1\n")), ParseError);
    CHECK_THROWS_AS(parse_scenario("[oops]\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario(minimal("r_values = 1, x, 3, 2\n")), ParseError);
    try {
        parse_scenario("[grid]\nn_sectors = 4\nn_sectors = 5\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    CHECK_THROWS_AS(load_scenario("/nonexistent/file.sfe"), ParseError);
}

TEST_CASE("validation names the offending field") {
    CHECK(field_of(minimal()) == "");
    CHECK(field_of(minimal("r_values = 1, -2, 3, 2\n")) == "r_values");
    CHECK(field_of(minimal("r_values = 1, 2, 3\n")) == "r_values");
    std::string t = minimal();
    auto swap = [&](const std::string& from, const std::string& to) {
        std::string u = t;
        u.replace(u.find(from), from.size(), to);
        return u;
    };
    CHECK(field_of(swap("alpha = 0.5", "alpha = 1.2")) == "alpha");
    CHECK(field_of(swap("epsilon = 0.5", "epsilon = 0")) == "epsilon");
    CHECK(field_of(swap("sigma_khat2 = 1", "sigma_khat2 = -1")) == "sigma_khat2");
    CHECK(field_of(swap("n_sectors = 4", "n_sectors = 2")) == "n_sectors");
    CHECK(field_of(swap("n_investors = 400", "n_investors = 0")) == "n_investors");
}

TEST_CASE("serialize round-trips") {
    for (const char* f : {"uniform.sfe", "bump.sfe", "cosine.sfe", "small_capital.sfe", "intermediate.sfe"}) {
        Scenario a = load_scenario(kScen + "/" + f);
        Scenario b = parse_scenario(serialize_scenario(a));
        CHECK(serialize_scenario(b) == serialize_scenario(a));
        CHECK(b.landscape.r_values == a.landscape.r_values);
    }
}

TEST_CASE("analytic derivatives agree with central differences") {
    for (const char* f : {"bump.sfe", "cosine.sfe"}) {
        Scenario s = load_scenario(kScen + "/" + f);
        s.grid.n_sectors = 400;
        resample(s);
        LandscapeDerivs a = landscape_derivatives(s);
        LandscapeDerivs d = fd_derivatives(s);
        double s1 = 0, s2 = 0, e1 = 0, e2 = 0;
        for (int i = 0; i < s.size(); ++i) {
            s1 = std::max(s1, std::abs(a.d1[i]));
            s2 = std::max(s2, std::abs(a.d2[i]));
            e1 = std::max(e1, std::abs(a.d1[i] - d.d1[i]));
            e2 = std::max(e2, std::abs(a.d2[i] - d.d2[i]));
        }
        CHECK(e1 < 1e-3 * s1);
        CHECK(e2 < 1e-2 * s2);
    }
}

TEST_CASE("flat landscape has zero derivatives") {
    Scenario s = load_scenario(kScen + "/uniform.sfe");
    LandscapeDerivs d = landscape_derivatives(s);
    for (int i = 0; i < s.size(); ++i) {
        CHECK(d.d1[i] == 0.0);
        CHECK(d.d2[i] == 0.0);
    }
}

TEST_CASE("named parameter access") {
    Scenario s = load_scenario(kScen + "/bump.sfe");
    double v = 0;
    CHECK(set_param(s, "gamma", 0.7));
    CHECK(get_param(s, "gamma", &v));
    CHECK(v == 0.7);
    CHECK_FALSE(set_param(s, "no_such_param", 1.0));
    CHECK_FALSE(get_param(s, "no_such_param", &v));
    auto names = param_names();
    CHECK(std::find(names.begin(), names.end(), "b") != names.end());
}
