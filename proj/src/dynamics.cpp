#include "sfe/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sfe/errors.hpp"
#include "sfe/stability.hpp"

namespace sfe {

using cd = std::complex<double>;

namespace {

constexpr double kSingular = 1e-14;
const cd I(0.0, 1.0);

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// F1 = b atan(K^alpha R/(<K^alpha><R>) - 1)
double price_term(const Scenario& s, const FieldSolution& sol, int i) {
    double u = (std::pow(sol.k_x[i], s.params.alpha) * sol.r[i] - sol.avg_ka * sol.avg_r) /
               (sol.avg_ka * sol.avg_r);
    return s.params.b * std::atan(u);
}

// scale of the price term inside f
double varsigma(const Scenario& s) { return 1.0 / s.params.epsilon; }

struct Poly {
    cd a0, a1, a2;  // det(Omega) = a0 + a1 Omega + a2 Omega^2
};

Poly dispersion_poly(const DispersionInputs& in, double G, const ExpectationParams& e, bool full) {
    double kappa = in.k / in.K;
    double P = in.l / in.R;
    Poly p;
    if (in.dR == 0.0 && in.m * G != 0.0) {
        // Q -> infinity; divide the relation through by -iQ
        p.a0 = e.a0 + I * e.a_coef * G;
        p.a1 = I * e.c_t;
        p.a2 = 0.0;
        return p;
    }
    double Q = in.dR == 0.0 ? 0.0 : 2 * in.m * G / in.dR;
    cd PQ(P, -Q);
    p.a0 = kappa * (1.0 - I * e.e_coef * G) + PQ * (e.a0 + I * e.a_coef * G);
    p.a1 = -I * kappa * e.g_coef + PQ * I * e.c_t;
    p.a2 = 0.0;
    if (full) {
        p.a0 += -P * e.b_x2 * G * G + kappa * e.f_x2 * G * G;
        p.a1 += -P * e.u_xt * G + kappa * e.v_xt * G;
        p.a2 += -P * e.d_t2 + kappa * e.h_t2;
    }
    return p;
}

}  // namespace

DynCoeffs c_family(const Scenario& s, double p, double f, double fprime) {
    DynCoeffs c;
    double q = p + 0.5;
    c.c1 = damping_exponent(s, p, f, fprime);
    c.c2 = std::log(q) - 2 * c.c1 / q;
    c.c3 = 1 - c.c1 + (p + 1.5) * c.c2;
    return c;
}

DynCoeffs dyn_coefficients(const Scenario& s, const FieldSolution& sol, int i) {
    const auto& P = s.params;
    if (sol.deserted[i]) throw DomainError("dyn_coefficients: deserted sector");
    double f = sol.f_x[i], af = std::abs(f);
    if (af < 1e-9) throw SingularError("dyn_coefficients: |f| below floor");
    DynCoeffs c = c_family(s, sol.p_x[i], f, sol.fprime_x[i]);
    double psi2 = sol.psi2[i];
    double excess = sol.bracket_x[i] / (2 * P.tau) / psi2;  // (D/(2 tau) - psi2)/psi2
    double g = sol.g_x[i], dg = sol.grad_g_x[i];
    c.k = 1 - P.eta * (1 - P.gamma * c.c3 / af) * excess +
          (P.alpha * (2 * g * g / P.sigma_xhat2 + dg) * c.c2 - (1 - P.alpha) * c.c3) / af;
    c.l = varsigma(s) * price_term(s, sol, i) * c.c3 / f;
    c.m = (1 - P.gamma * c.c3 / f) * excess - g * g * c.c2 / P.sigma_xhat2;
    c.n = dg * c.c2 / af;
    return c;
}

DispersionInputs dispersion_inputs(const Scenario& s, const FieldSolution& sol, int i) {
    DynCoeffs c = dyn_coefficients(s, sol, i);
    DispersionInputs in;
    in.k = c.k;
    in.l = c.l;
    in.m = c.m;
    in.n = c.n;
    in.K = sol.k_x[i];
    in.R = sol.r[i];
    in.dR = sol.r1[i];
    in.d2R = sol.r2[i];
    return in;
}

cd frequency(const DispersionInputs& in, double G, const ExpectationParams& e, const DynOptions& opt) {
    Poly p = dispersion_poly(in, G, e, opt.full_matrix);
    cd lin = std::abs(p.a1) < kSingular ? cd(nan(), nan()) : -p.a0 / p.a1;
    if (std::abs(p.a2) < kSingular) {
        if (std::abs(p.a1) < kSingular) throw SingularError("frequency: vanishing denominator");
        return lin;
    }
    cd disc = std::sqrt(p.a1 * p.a1 - 4.0 * p.a2 * p.a0);
    cd r1 = (-p.a1 + disc) / (2.0 * p.a2), r2 = (-p.a1 - disc) / (2.0 * p.a2);
    if (std::isnan(lin.real())) return std::abs(r1) < std::abs(r2) ? r1 : r2;
    return std::abs(r1 - lin) < std::abs(r2 - lin) ? r1 : r2;
}

cd frequency(const Scenario& s, const FieldSolution& sol, int i, double G, const ExpectationParams& e,
             const DynOptions& opt) {
    return frequency(dispersion_inputs(s, sol, i), G, e, opt);
}

double damping_lhs(const DispersionInputs& in, double G, const ExpectationParams& e) {
    double kappa = in.k / in.K, P = in.l / in.R;
    double head = e.c_t * P * (kappa + e.a0 * P);
    double tail;
    if (in.m * G == 0.0) tail = 0.0;
    else if (in.dR == 0.0) tail = std::copysign(std::numeric_limits<double>::infinity(), e.c_t * e.a0);
    else tail = 4 * in.m * in.m * e.c_t * e.a0 * G * G / (in.dR * in.dR);
    return head + tail;
}

bool damping_condition(const DispersionInputs& in, double G, const ExpectationParams& e) {
    double P = in.l / in.R;
    double Q = in.dR == 0.0 ? 0.0 : 2 * in.m * G / in.dR;
    if (std::abs(e.c_t) * (P * P + Q * Q) < kSingular && !(in.dR == 0.0 && in.m * G != 0.0))
        throw SingularError("damping_condition: vanishing denominator");
    return damping_lhs(in, G, e) > 0;
}

bool damping_condition(const Scenario& s, const FieldSolution& sol, int i, double G,
                       const ExpectationParams& e) {
    return damping_condition(dispersion_inputs(s, sol, i), G, e);
}

double determinant_residual(const DispersionInputs& in, cd omega, double G, const ExpectationParams& e,
                            const DynOptions& opt) {
    Poly p = dispersion_poly(in, G, e, opt.full_matrix);
    cd t1 = p.a1 * omega, t2 = p.a2 * omega * omega;
    double scale = std::abs(p.a0) + std::abs(t1) + std::abs(t2);
    if (scale == 0.0) return 0.0;
    return std::abs(p.a0 + t1 + t2) / scale;
}

double exact_threshold_g2(const DispersionInputs& in, const ExpectationParams& e) {
    double kappa = in.k / in.K, P = in.l / in.R;
    if (in.m == 0.0 || in.dR == 0.0 || e.a0 == 0.0) return nan();
    double g2 = -P * (kappa + e.a0 * P) * in.dR * in.dR / (4 * in.m * in.m * e.a0);
    return g2 > 0 ? g2 : nan();
}

double stc_condition(const Scenario& s, const FieldSolution& sol, int i, const ExpectationParams& e) {
    double F1 = price_term(s, sol, i);
    double sgn = sol.f_x[i] >= 0 ? 1.0 : -1.0;
    return e.a0 / sol.r[i] - sgn * (1 - s.params.alpha) / (varsigma(s) * sol.k_x[i] * F1);
}

double stc_threshold_g2(const Scenario& s, const FieldSolution& sol, int i, const ExpectationParams& e) {
    const auto& P = s.params;
    double F1 = price_term(s, sol, i);
    double excess = sol.bracket_x[i] / (2 * P.tau);
    if (excess == 0.0 || e.a0 == 0.0) return nan();
    double lead = varsigma(s) * F1 * sol.psi2[i] * sol.r1[i] / (P.gamma * excess);
    return lead * lead * std::abs(stc_condition(s, sol, i, e)) / (4 * e.a0 * sol.r[i]);
}

const char* to_string(Regime r) {
    switch (r) {
    case Regime::k_small: return "k_small";
    case Regime::k_large_stable: return "k_large_stable";
    case Regime::k_large_unstable: return "k_large_unstable";
    case Regime::intermediate: return "intermediate";
    case Regime::deserted: return "deserted";
    }
    return "?";
}

Regime regime_of(const Scenario& s, const FieldSolution& sol, int i) {
    if (sol.deserted[i]) return Regime::deserted;
    double k = sol.k_x[i];
    if (k < 0.1) return Regime::k_small;
    if (k > 10.0)
        return local_denominator(s, sol, i) > 0 ? Regime::k_large_stable : Regime::k_large_unstable;
    return Regime::intermediate;
}

bool regime_valid(const Scenario& s, const FieldSolution& sol, int i, Regime r) {
    constexpr double big = 10.0;
    if (r == Regime::deserted) return false;
    DynCoeffs c = dyn_coefficients(s, sol, i);
    double kk = std::abs(c.k / sol.k_x[i]);
    switch (r) {
    case Regime::k_small:
        return c.k < 0 && c.l > 0 && kk >= big * c.l && std::abs(c.m) * big <= c.l;
    case Regime::k_large_stable:
        return c.k < 0 && c.l > 0 && kk * big <= c.l;
    case Regime::k_large_unstable:
        return c.k > 0 && c.l > 0 && kk >= big * c.l;
    case Regime::intermediate: {
        double r3 = std::abs(c.c3 / sol.f_x[i]);
        return c.k < 0 && s.params.gamma * r3 >= big && (1 - s.params.alpha) * r3 >= big;
    }
    default:
        return false;
    }
}

std::vector<double> default_g_range() {
    std::vector<double> g(32);
    for (int j = 0; j < 32; ++j) g[j] = std::pow(10.0, -3.0 + 5.0 * j / 31.0);
    return g;
}

std::vector<double> parse_g_range(const std::string& text) {
    std::istringstream in(text);
    std::string a, b, c;
    if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) || c.empty())
        throw DomainError("g-range must be lo:hi:n");
    double lo, hi;
    long n;
    try {
        size_t pa, pb, pc;
        lo = std::stod(a, &pa);
        hi = std::stod(b, &pb);
        n = std::stol(c, &pc);
        if (pa != a.size() || pb != b.size() || pc != c.size()) throw DomainError("");
    } catch (const std::exception&) {
        throw DomainError("g-range must be lo:hi:n with numbers");
    }
    if (n < 1 || lo < 0 || hi < lo || !std::isfinite(hi)) throw DomainError("g-range needs 0 <= lo <= hi, n >= 1");
    if (n > 1 && lo == hi) throw DomainError("g-range with n > 1 needs lo < hi");
    std::vector<double> g(n);
    for (long j = 0; j < n; ++j) {
        double t = n == 1 ? 0.0 : double(j) / double(n - 1);
        g[j] = lo > 0 ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
    }
    return g;
}

DynamicsReport regime_analysis(const Scenario& s, const FieldSolution& sol, const ExpectationParams& e,
                               const std::vector<double>& g_range, const DynOptions& opt) {
    const int n = sol.size();
    DynamicsReport rep;
    rep.g_wave = g_range;
    rep.omega.assign(n, {});
    rep.damped.assign(n, {});
    rep.regime_verdict.assign(n, {});
    rep.coeffs.assign(n, {});
    rep.regime.assign(n, Regime::deserted);
    rep.regime_valid.assign(n, 0);
    rep.threshold_g2.assign(n, nan());
    rep.stc_g2.assign(n, nan());
    rep.max_residual.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        rep.regime[i] = regime_of(s, sol, i);
        if (rep.regime[i] == Regime::deserted || std::abs(sol.f_x[i]) < 1e-9) {
            rep.regime[i] = Regime::deserted;
            continue;
        }
        rep.coeffs[i] = dyn_coefficients(s, sol, i);
        rep.regime_valid[i] = regime_valid(s, sol, i, rep.regime[i]);
        DispersionInputs in = dispersion_inputs(s, sol, i);
        rep.threshold_g2[i] = exact_threshold_g2(in, e);
        bool stc_ok = stc_condition(s, sol, i, e) < 0;
        rep.stc_g2[i] = stc_threshold_g2(s, sol, i, e);
        double kappa = in.k / in.K, P = in.l / in.R;
        for (double G : g_range) {
            cd om;
            double res;
            try {
                om = frequency(in, G, e, opt);
                res = determinant_residual(in, om, G, e, opt);
            } catch (const SingularError&) {
                om = cd(nan(), nan());
                res = nan();
            }
            rep.omega[i].push_back(om);
            if (!std::isnan(res)) rep.max_residual[i] = std::max(rep.max_residual[i], res);
            bool damped = damping_lhs(in, G, e) > 0;
            rep.damped[i].push_back(damped);
            bool verdict;
            switch (rep.regime[i]) {
            case Regime::k_small:
                verdict = e.c_t * P * kappa > 0;
                break;
            case Regime::k_large_stable:
            case Regime::k_large_unstable:
                verdict = e.c_t * e.a0 > 0;
                break;
            default:
                if (!stc_ok) verdict = e.c_t * P * (kappa + e.a0 * P) > 0 || (e.c_t * e.a0 > 0 && G != 0);
                else if (e.c_t < 0) verdict = G * G < rep.stc_g2[i];
                else verdict = G * G > rep.stc_g2[i];
                break;
            }
            rep.regime_verdict[i].push_back(verdict);
        }
    }
    return rep;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
    return buf;
}

}  // namespace

std::string dynamics_csv(const Scenario& s, const DynamicsReport& rep) {
    std::string out = "x,G,re_omega,im_omega,damped,regime\n";
    for (size_t i = 0; i < rep.regime.size(); ++i) {
        if (rep.regime[i] == Regime::deserted) continue;
        std::string x = num(s.grid.center(int(i)));
        for (size_t j = 0; j < rep.g_wave.size(); ++j) {
            out += x + "," + num(rep.g_wave[j]) + "," + num(rep.omega[i][j].real()) + "," +
                   num(rep.omega[i][j].imag()) + "," + (rep.damped[i][j] ? "1" : "0") + "," +
                   to_string(rep.regime[i]) + "\n";
        }
    }
    return out;
}

std::string dynamics_json(const Scenario& s, const DynamicsReport& rep) {
    nlohmann::ordered_json j;
    j["n_g"] = rep.g_wave.size();
    auto& arr = j["sectors"] = nlohmann::ordered_json::array();
    auto opt_num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
    for (size_t i = 0; i < rep.regime.size(); ++i) {
        nlohmann::ordered_json e;
        e["x"] = s.grid.center(int(i));
        e["regime"] = to_string(rep.regime[i]);
        if (rep.regime[i] != Regime::deserted) {
            e["regime_valid"] = bool(rep.regime_valid[i]);
            const auto& c = rep.coeffs[i];
            e["k"] = c.k;
            e["l"] = c.l;
            e["m"] = c.m;
            e["n"] = c.n;
            e["c1"] = c.c1;
            e["c2"] = c.c2;
            e["c3"] = c.c3;
            e["threshold_g2"] = opt_num(rep.threshold_g2[i]);
            e["stc_threshold_g2"] = opt_num(rep.stc_g2[i]);
            e["max_residual"] = rep.max_residual[i];
        }
        arr.push_back(e);
    }
    return j.dump(2) + "\n";
}

}  // namespace sfe
