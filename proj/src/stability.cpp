#include "sfe/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sfe/errors.hpp"

namespace sfe {

const char* to_string(Pattern p) {
    switch (p) {
    case Pattern::pattern1: return "pattern1";
    case Pattern::pattern2: return "pattern2";
    case Pattern::pattern3_stable: return "pattern3_stable";
    case Pattern::pattern3_unstable: return "pattern3_unstable";
    case Pattern::deserted: return "deserted";
    }
    return "?";
}

const char* to_string(MapVerdict v) { return v == MapVerdict::converges ? "converges" : "diverges"; }

const char* to_string(SensParam p) {
    return p == SensParam::relative_return_Y ? "relative_return_Y" : "short_term_f_param";
}

double local_denominator(const Scenario& s, const FieldSolution& sol, int i) {
    if (sol.deserted[i]) throw DomainError("local_denominator: deserted sector");
    return 1.0 - local_multiplier(s, sol, i);
}

namespace {

MapVerdict judge(double e0, double e_end, double e_min) {
    if (e_min < 1e-3 * e0) return MapVerdict::converges;
    return e_end < e0 ? MapVerdict::converges : MapVerdict::diverges;
}

}  // namespace

MapVerdict iterate_map_check(const Scenario& s, const FieldSolution& sol, int i, double perturbation,
                             int steps) {
    const double k0 = sol.k_held[i];
    if (std::abs(perturbation) > 0.01 * k0 * (1 + 1e-12))
        throw DomainError("iterate_map_check: perturbation above 1% of K_X");
    const double e0 = std::abs(perturbation);
    if (e0 == 0.0) return MapVerdict::converges;
    double k = k0 + perturbation;
    double e = e0, e_min = e0;
    for (int n = 0; n < steps; ++n) {
        LocalEval ev = local_map(s, sol, i, k);
        if (!ev.active) return MapVerdict::diverges;
        k = std::exp(ev.log_phi);
        if (!(k > 0) || !std::isfinite(k)) return MapVerdict::diverges;
        e = std::abs(k - k0);
        e_min = std::min(e_min, e);
        if (e_min < 1e-3 * e0) return MapVerdict::converges;
        if (e > 1e6 * e0 || e > 1e3 * k0) return MapVerdict::diverges;
    }
    return judge(e0, e, e_min);
}

MapVerdict iterate_linear_map(double multiplier, double perturbation, int steps) {
    const double e0 = std::abs(perturbation);
    if (e0 == 0.0) return MapVerdict::converges;
    double d = perturbation, e_min = e0;
    for (int n = 0; n < steps; ++n) {
        d *= multiplier;
        e_min = std::min(e_min, std::abs(d));
        if (!std::isfinite(d)) return MapVerdict::diverges;
    }
    return judge(e0, std::abs(d), e_min);
}

double sensitivity(const Scenario& s, const FieldSolution& sol, int i, SensParam param) {
    const auto& P = s.params;
    LocalEval e = local_map(s, sol, i, sol.k_held[i]);
    if (!e.active) throw DomainError("sensitivity: deserted sector");
    double af = std::abs(e.f);
    if (af < 1e-9) throw SingularError("sensitivity: |f| below floor");
    double denom = 1.0 - local_multiplier(s, sol, i);
    if (std::abs(denom) < 1e-12) throw SingularError("sensitivity: vanishing stability denominator");
    double kappa = e.c1;
    double kp = dlog_first_dp(e.p) - 2 * kappa / (e.p + 0.5);
    double dlnphi;
    if (param == SensParam::relative_return_Y) {
        dlnphi = -kp / (P.sigma_xhat2 * af);
    } else {
        double sgn = e.f > 0 ? 1.0 : -1.0;
        double dp = -(1 + 0.5 * sgn) / (P.sigma_xhat2 * af) - e.p * sgn / af;
        dlnphi = kp * dp - (1 - 3 * kappa) * sgn / af;
    }
    return sol.k_held[i] * dlnphi / denom;
}

double sensitivity_oracle(const Scenario& s, const FieldSolution& sol, int i, SensParam param, double step) {
    bool y = param == SensParam::relative_return_Y;
    double kp = local_resolve(s, sol, i, y ? step : 0.0, y ? 0.0 : step);
    double km = local_resolve(s, sol, i, y ? -step : 0.0, y ? 0.0 : -step);
    return (kp - km) / (2 * step);
}

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    size_t lo = size_t(std::floor(pos));
    size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

StabilityReport classify(const Scenario& s, const FieldSolution& sol, const ClassifyOptions& opt) {
    const auto& P = s.params;
    const int n = sol.size();
    StabilityReport rep;
    rep.stab_denom.assign(n, 0.0);
    rep.b_crit.assign(n, 0.0);
    rep.pattern.assign(n, Pattern::deserted);
    std::vector<double> active_k;
    for (int i = 0; i < n; ++i)
        if (!sol.deserted[i]) active_k.push_back(sol.k_x[i]);
    if (active_k.empty()) return rep;
    double q_lo = quantile(active_k, opt.low_quantile);
    double q_hi = quantile(active_k, opt.high_quantile);

    if (opt.with_sensitivities) {
        rep.sensitivities["relative_return_Y"].assign(n, 0.0);
        rep.sensitivities["short_term_f_param"].assign(n, 0.0);
    }
    for (int i = 0; i < n; ++i) {
        if (sol.deserted[i]) continue;
        double mu = local_multiplier(s, sol, i);
        rep.b_crit[i] = mu;
        rep.stab_denom[i] = 1.0 - mu;
        double k = sol.k_x[i];
        double dividend = P.alpha * s.productivity(i) * std::pow(k, P.alpha - 1);
        double u = (std::pow(k, P.alpha) * sol.r[i] - sol.avg_ka * sol.avg_r) / (sol.avg_ka * sol.avg_r);
        double price = std::abs(P.b * std::atan(u));
        if (rep.stab_denom[i] < 0) rep.pattern[i] = Pattern::pattern3_unstable;
        else if (k < q_lo && dividend >= opt.dominance * price) rep.pattern[i] = Pattern::pattern1;
        else if (k > q_hi && price >= opt.dominance * dividend) rep.pattern[i] = Pattern::pattern3_stable;
        else rep.pattern[i] = Pattern::pattern2;
        if (opt.with_sensitivities) {
            for (SensParam sp : {SensParam::relative_return_Y, SensParam::short_term_f_param}) {
                double v;
                try {
                    v = sensitivity(s, sol, i, sp);
                } catch (const SingularError&) {
                    v = std::nan("");
                }
                rep.sensitivities[to_string(sp)][i] = v;
            }
        }
    }
    return rep;
}

std::string stability_csv(const Scenario& s, const StabilityReport& rep) {
    std::string out = "x,stab_denom,b_crit,pattern";
    for (const auto& [name, v] : rep.sensitivities) out += ",dk_d_" + name;
    out += "\n";
    char buf[64];
    for (size_t i = 0; i < rep.pattern.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", s.grid.center(int(i)));
        out += buf;
        std::snprintf(buf, sizeof buf, ",%.17g", rep.stab_denom[i]);
        out += buf;
        std::snprintf(buf, sizeof buf, ",%.17g", rep.b_crit[i]);
        out += buf;
        out += ",";
        out += to_string(rep.pattern[i]);
        for (const auto& [name, v] : rep.sensitivities) {
            std::snprintf(buf, sizeof buf, ",%.17g", v[i]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace sfe
