#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sfe/errors.hpp"
#include "sfe/fieldcore.hpp"
#include "sfe/specfun.hpp"

namespace sfe {

const char* to_string(CfCase c) {
    switch (c) {
    case CfCase::case1: return "case1";
    case CfCase::case2_grad: return "case2_grad";
    case CfCase::case2_max: return "case2_max";
    case CfCase::case3: return "case3";
    case CfCase::case4: return "case4";
    }
    return "?";
}

namespace {

// shared symbols of the parametric cases. f is approximated as c - d/(K^alpha R) - gamma D
// with D the firm level D/(2 tau).
struct CaseGlobals {
    double level;  // firm density level
    double c, d, gd;
    double cn;     // C with the 3/2 of the large-p Gamma asymptotic absorbed
    double sig;    // sigma_khat2
    double m;
};

CaseGlobals globals(const Scenario& s, const FieldSolution& sol) {
    const auto& P = s.params;
    CaseGlobals g;
    g.level = sol.lagrange_d / (2 * P.tau);
    g.c = P.b * std::numbers::pi / (2 * P.epsilon);
    g.d = P.b * sol.avg_ka * sol.avg_r / P.epsilon;
    g.gd = P.gamma * g.level / P.epsilon;
    g.cn = 1.5 * sol.c_norm;
    g.sig = P.sigma_khat2;
    g.m = sol.big_m;
    return g;
}

[[noreturn]] void regime(CfCase c, int i, const std::string& why) {
    throw RegimeError(std::string(to_string(c)) + " at sector " + std::to_string(i) + ": " + why);
}

double checked_gamma(CfCase c, int i, double x) {
    try {
        return sfe::gamma(x);
    } catch (const PoleError&) {
        regime(c, i, "Gamma argument on a pole");
    }
}

double from_power(CfCase c, int i, double ka, double alpha) {
    if (!(ka > 0) || !std::isfinite(ka)) regime(c, i, "non-positive K^alpha");
    return std::pow(ka, 1.0 / alpha);
}

}  // namespace

Case4Terms case4_terms(const Case4Inputs& in) {
    double l = std::log(in.p_bar + 0.5) - 1.0;
    if (!(l > 0)) throw RegimeError("case4: needs ln(p_bar + 1/2) > 1");
    if (in.b2_prime == 0.0) throw RegimeError("case4: B2' vanishes");
    if (!(in.c_norm > 0) || !(in.d_level > 0)) throw RegimeError("case4: needs C > 0 and D > 0");
    double ab = std::abs(in.b2), bp2 = in.b2_prime * in.b2_prime;
    Case4Terms t;
    t.d = (1 + in.alpha) / (2 * in.alpha);
    t.a = 24 * ab * ab * ab * l * l / (in.sigma_x2 * in.sigma_khat2 * bp2);
    t.c = 8 * in.c_norm / in.d_level * std::sqrt(3 * in.sigma_khat2 * ab * l / (in.sigma_x2 * bp2));
    try {
        t.x = solve_power_exp(t.d, t.a, t.c);
    } catch (const DomainError& e) {
        throw RegimeError(std::string("case4: ") + e.what());
    }
    return t;
}

double qtn_residual(const Case4Terms& t) {
    return std::abs(std::pow(t.x, t.d) * std::exp(-t.a * t.x) - t.c) / t.c;
}

std::vector<double> closed_form_case(const Scenario& s, const FieldSolution& sol, CfCase c) {
    const auto& P = s.params;
    const int n = sol.size();
    CaseGlobals G = globals(s, sol);
    std::vector<double> out(n, 0.0);

    double p_bar = 0, wsum = 0;
    for (int i = 0; i < n; ++i) {
        if (sol.deserted[i]) continue;
        p_bar += sol.psi2[i] * sol.p_x[i];
        wsum += sol.psi2[i];
    }
    p_bar /= wsum;

    for (int i = 0; i < n; ++i) {
        if (sol.deserted[i]) continue;
        double r = sol.r[i], r1 = sol.r1[i], r2 = sol.r2[i];
        switch (c) {
        case CfCase::case1: {
            double cg = G.c - G.gd;
            if (!(cg > 0)) regime(c, i, "needs c - gamma D > 0");
            double mc = G.m / G.c;
            double lead = G.cn * G.sig * checked_gamma(c, i, mc) / (G.level * cg);
            // f ~ c - gamma D inside the last factor
            double tail = G.d / (cg * r) * (1 + G.m * digamma(mc) * (1 + r2 / G.m));
            out[i] = from_power(c, i, lead + tail, P.alpha);
            break;
        }
        case CfCase::case2_grad: {
            double g2 = r1 * r1;
            if (g2 == 0.0) regime(c, i, "needs a non-zero gradient");
            if (!(G.m > G.c)) regime(c, i, "needs M > c");
            double sq = std::sqrt((G.m - G.c) / G.c);
            double ia = 1.0 / P.alpha;
            double t1 = G.level / g2;
            double t2 = G.cn * G.sig * sq / (std::pow(g2, 1 - ia) * std::pow(G.level, ia) * G.c);
            double q = std::pow(g2, ia) * G.cn * G.sig;
            double lvl = std::pow(G.level, 1 + ia);
            double num = G.d / r * q * (sq + (G.m / G.c + r2 * G.c / G.d) / (2 * sq));
            double den = G.c * G.c * lvl * (1 - q * sq / (G.c * lvl));
            if (den == 0.0) regime(c, i, "vanishing denominator");
            out[i] = from_power(c, i, t1 - t2 - num / den, P.alpha);
            break;
        }
        case CfCase::case2_max: {
            if (!(r2 < 0)) regime(c, i, "needs a local maximum of R (R'' < 0)");
            double base = G.cn * G.sig / (std::abs(r2) * G.c) * checked_gamma(c, i, (G.m - sol.grad_g_x[i]) / G.c);
            if (!(base > 0)) regime(c, i, "non-positive base");
            out[i] = std::pow(base, 2.0 / (3 * P.alpha));
            break;
        }
        case CfCase::case3: {
            if (!(sol.f_x[i] > 0)) regime(c, i, "needs f > 0");
            double b1 = P.alpha * s.productivity(i) / P.epsilon;
            const double p0 = -1.5;
            double lg = log_gamma_hat(s, p0, sol.f_x[i], sol.fprime_x[i]);
            double gh = std::exp(lg);
            double kappa = damping_exponent(s, p0, sol.f_x[i], sol.fprime_x[i]);
            double ghp = gh * (dlog_first_dp(p0) - 2 * kappa / (p0 + 0.5));
            double cs = sol.c_norm * G.sig / G.level;
            double y = G.m - sol.g_x[i] * sol.g_x[i] / P.sigma_xhat2 - sol.grad_g_x[i];
            double lead = std::pow(cs * gh / b1, 1.0 / P.alpha);
            double corr = cs * ghp * y / (std::pow(b1, 1.0 / P.alpha) * std::pow(cs * gh, 1 - 1.0 / P.alpha));
            double k = lead + corr;
            if (!(k > 0)) regime(c, i, "non-positive capital");
            out[i] = k;
            break;
        }
        case CfCase::case4: {
            double ref = P.epsilon * sol.avg_ka * sol.avg_r;
            Case4Inputs in{P.alpha, P.b * r / ref + P.gamma / P.epsilon, P.b * r1 / ref, sol.c_norm,
                           G.level, p_bar, P.sigma_x2, P.sigma_khat2};
            Case4Terms t;
            try {
                t = case4_terms(in);
            } catch (const RegimeError& e) {
                regime(c, i, e.what());
            }
            out[i] = std::pow(t.x, 1.0 / P.alpha);
            break;
        }
        }
    }
    return out;
}

std::vector<double> closed_form_case(const Scenario& s, CfCase c) {
    try {
        return closed_form_case(s, solve_collective_state(s), c);
    } catch (const NonConvergenceError&) {
    } catch (const SingularError&) {
    }
    return closed_form_case(s, evaluate_state(s, std::vector<double>(s.size(), 1.0)), c);
}

double expansion_constant() { return 2.0 - std::numbers::ln2 - kEulerGamma; }

PeakExpansion expansion_at_peak(const Scenario& s, const FieldSolution& sol) {
    const int n = sol.size();
    const double h = s.grid.spacing();
    PeakExpansion out;
    out.peak = sol.argmax;
    const int m = sol.argmax;
    const double km = sol.k_held[m];
    out.first.assign(n, 0.0);
    out.second.assign(n, 0.0);
    out.actual.assign(n, 0.0);

    // ln Phi along the sector axis at the peak capital, globals frozen
    auto lphi = [&](int j) {
        LocalEval e = local_map(s, sol, j, km);
        if (!e.active) throw DomainError("expansion_at_peak: neighbour deserted at peak capital");
        return e.log_phi;
    };
    double l0 = lphi(m), lp = lphi(s.grid.wrap(m + 1)), lm = lphi(s.grid.wrap(m - 1));
    double c1 = (lp - lm) / (2 * h);
    double c2 = (lp - 2 * l0 + lm) / (h * h);
    double denom = 1.0 - local_multiplier(s, sol, m);
    if (std::abs(denom) < 1e-12) throw SingularError("expansion_at_peak: vanishing stability denominator");

    const double len = s.grid.volume();
    for (int j = 0; j < n; ++j) {
        if (sol.deserted[j]) continue;
        double dx = s.grid.center(j) - s.grid.center(m);
        if (s.grid.boundary == Boundary::periodic) dx -= len * std::round(dx / len);
        out.first[j] = km * c1 * dx / denom;
        out.second[j] = km * (c1 * dx + 0.5 * c2 * dx * dx) / denom;
        out.actual[j] = sol.k_x[j] - km;
    }
    return out;
}

}  // namespace sfe
