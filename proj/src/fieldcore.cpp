#include "sfe/fieldcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sfe/errors.hpp"
#include "sfe/specfun.hpp"

namespace sfe {

int FieldSolution::active_count() const {
    return int(std::count(deserted.begin(), deserted.end(), 0));
}

double short_term_return(const Scenario& s, double k, int i, double psi2, double avg_ka, double avg_r) {
    const auto& p = s.params;
    double ka = std::pow(k, p.alpha);
    double ref = avg_ka * avg_r;
    double u = (ka * s.landscape.r_values[i] - ref) / ref;
    return (p.alpha * s.productivity(i) * ka / k - p.gamma * psi2 + p.b * std::atan(u)) / p.epsilon;
}

double short_term_return_dk(const Scenario& s, double k, int i, double avg_ka, double avg_r) {
    const auto& p = s.params;
    double ka = std::pow(k, p.alpha);
    double ref = avg_ka * avg_r;
    double r = s.landscape.r_values[i];
    double u = (ka * r - ref) / ref;
    double dividend = p.alpha * (p.alpha - 1) * s.productivity(i) * ka / (k * k);
    double price = p.b * p.alpha * ka / k * r / ref / (1 + u * u);
    return (dividend + price) / p.epsilon;
}

double mobility_scale(const StructuralParams& p, double avg_ka, double avg_r) {
    return (p.a_f0 + p.nu * p.b / avg_r) / avg_ka;
}

std::pair<double, double> mobility(const Scenario& s, const LandscapeDerivs& d, double k, int i,
                                   double avg_ka, double avg_r) {
    double w = mobility_scale(s.params, avg_ka, avg_r) * std::pow(k, s.params.alpha);
    return {d.d1[i] * w, d.d2[i] * w};
}

double firm_bracket(const Scenario& s, const LandscapeDerivs& d, double k, int i) {
    const auto& p = s.params;
    double h = std::pow(k, p.eta);
    return 0.5 * (1 - p.eta) * (d.d1[i] * d.d1[i] * h * h + p.sigma_x2 * d.d2[i] * h);
}

Calibration calibrate_from_brackets(const Scenario& s, const std::vector<double>& bracket) {
    const int n = int(bracket.size());
    for (double b : bracket)
        if (!std::isfinite(b)) throw NoSolutionError("calibrate_lagrange: non-finite density bracket");
    const double target = 2 * s.params.tau * s.params.n_firms / s.grid.spacing();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return bracket[a] < bracket[b]; });

    // firm count at D = b_(m) is (h/2tau) sum_{j<m} (b_(m) - b_(j)); nondecreasing in m.
    // find the first m whose count already reaches N, then solve exactly on the m lowest.
    double prefix = 0;
    int m = n;
    for (int j = 0; j < n; ++j) {
        double reach = j * bracket[order[j]] - prefix;
        if (reach >= target) {
            m = j;
            break;
        }
        prefix += bracket[order[j]];
    }
    if (m == 0) throw NoSolutionError("calibrate_lagrange: no active sector");
    Calibration c;
    c.lagrange_d = (target + prefix) / m;
    c.deserted.assign(n, 1);
    for (int j = 0; j < m; ++j)
        if (bracket[order[j]] < c.lagrange_d) c.deserted[order[j]] = 0;
    if (!std::isfinite(c.lagrange_d)) throw NoSolutionError("calibrate_lagrange: no finite multiplier");
    return c;
}

Calibration calibrate_lagrange(const Scenario& s, const std::vector<double>& k) {
    auto d = landscape_derivatives(s);
    std::vector<double> br(k.size());
    for (size_t i = 0; i < k.size(); ++i) br[i] = firm_bracket(s, d, k[i], int(i));
    return calibrate_from_brackets(s, br);
}

std::vector<double> firm_density(const Scenario& s, const std::vector<double>& k, double lagrange_d) {
    auto d = landscape_derivatives(s);
    std::vector<double> out(k.size());
    for (size_t i = 0; i < k.size(); ++i)
        out[i] = std::max(0.0, (lagrange_d - firm_bracket(s, d, k[i], int(i))) / (2 * s.params.tau));
    return out;
}

double attractivity(const Scenario& s, double f, double g, double grad_g, double corr) {
    return g * g / s.params.sigma_xhat2 + f + 0.5 * std::abs(f) + grad_g - corr;
}

double relative_attractivity(const Scenario& s, double big_m, double a, double f, double f_floor) {
    if (std::abs(f) < f_floor) throw SingularError("relative_attractivity: |f| below floor");
    return (big_m - a) / (s.params.sigma_xhat2 * std::abs(f));
}

double damping_exponent(const Scenario& s, double p, double f, double fprime) {
    double af = std::abs(f);
    double q = p + 0.5;
    return s.params.sigma_x2 * s.params.sigma_khat2 * q * q * fprime * fprime / (96 * af * af * af);
}

double log_gamma_hat(const Scenario& s, double p, double f, double fprime) {
    double c1 = fprime == 0.0 ? 0.0 : damping_exponent(s, p, f, fprime);
    return pcf_log_moments(p).log_first - c1;
}

double gamma_hat(const Scenario& s, double p, double f, double fprime) {
    return std::exp(log_gamma_hat(s, p, f, fprime));
}

double dlog_first_dp(double p) {
    double h = 1e-5 * std::max(1.0, std::abs(p));
    return (pcf_log_moments(p + h).log_first - pcf_log_moments(p - h).log_first) / (2 * h);
}

namespace {

// log of the per-sector investor count divided by C
double log_investor_weight(const Scenario& s, double p, double f, double fprime, double f_floor) {
    double af = std::max(std::abs(f), f_floor);
    double c1 = fprime == 0.0 ? 0.0 : damping_exponent(s, p, af, fprime);
    return -c1 + 0.5 * std::log(s.params.sigma_khat2 / af) + pcf_log_moments(p).log_zeroth;
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double acc = 0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

double correction_term(const Scenario& s, double dfdk, double psi2, double nhat) {
    if (!s.params.include_F_correction || !(nhat > 0)) return 0.0;
    double t = dfdk * psi2 / nhat;
    return t * t / (2 * s.params.sigma_khat2);
}

}  // namespace

double normalize_c(const Scenario& s, const std::vector<double>& p, const std::vector<double>& f,
                   const std::vector<double>& fprime, const std::vector<char>& deserted) {
    std::vector<double> w;
    for (size_t i = 0; i < p.size(); ++i)
        if (!deserted[i]) w.push_back(log_investor_weight(s, p[i], f[i], fprime[i], 1e-300));
    double l = log_sum_exp(w);
    if (!std::isfinite(l)) throw NoSolutionError("normalize_c: normalization integral vanishes");
    return std::exp(std::log(s.params.n_investors / s.grid.spacing()) - l);
}

double investor_shift(const Scenario& s, const FieldSolution& sol, int i) {
    if (!s.params.include_F_correction || sol.deserted[i] || !(sol.nhat[i] > 0)) return 0.0;
    double dfdk = short_term_return_dk(s, sol.k_held[i], i, sol.avg_ka, sol.avg_r);
    return dfdk / sol.f_x[i] * sol.psi2[i] / sol.nhat[i];
}

double investor_density(const Scenario& s, const FieldSolution& sol, double khat, int i,
                        bool pointwise_damping) {
    if (sol.deserted[i]) return 0.0;
    double af = std::abs(sol.f_x[i]);
    double fp = sol.fprime_x[i];
    double damp;
    if (pointwise_damping) {
        double k2 = khat * khat;
        damp = std::exp(-s.params.sigma_x2 * k2 * k2 * fp * fp / (96 * s.params.sigma_khat2 * af));
    } else {
        damp = std::exp(-sol.c1_x[i]);
    }
    double z = std::sqrt(af / s.params.sigma_khat2) * (khat + investor_shift(s, sol, i));
    double d = pcf_d(sol.p_x[i], z);
    return sol.c_norm * damp * d * d;
}

FieldSolution evaluate_state(const Scenario& s, const std::vector<double>& k,
                             const std::vector<double>* nhat_prev, double f_floor) {
    const auto& P = s.params;
    const int n = s.size();
    const double h = s.grid.spacing();
    auto d = landscape_derivatives(s);
    FieldSolution st;
    st.r = s.landscape.r_values;
    st.r1 = d.d1;
    st.r2 = d.d2;
    st.k_held = k;
    st.bracket_x.resize(n);
    for (int i = 0; i < n; ++i) st.bracket_x[i] = firm_bracket(s, d, k[i], i);
    Calibration cal = calibrate_from_brackets(s, st.bracket_x);
    st.lagrange_d = cal.lagrange_d;
    st.deserted = cal.deserted;
    st.psi2.assign(n, 0.0);
    double wsum = 0, wka = 0, wr = 0;
    for (int i = 0; i < n; ++i) {
        if (st.deserted[i]) continue;
        st.psi2[i] = (cal.lagrange_d - st.bracket_x[i]) / (2 * P.tau);
        wsum += st.psi2[i];
        wka += st.psi2[i] * std::pow(k[i], P.alpha);
        wr += st.psi2[i] * st.r[i];
    }
    st.avg_ka = wka / wsum;
    st.avg_r = wr / wsum;
    st.mob_scale = mobility_scale(P, st.avg_ka, st.avg_r);

    st.f_x.resize(n);
    st.g_x.resize(n);
    st.grad_g_x.resize(n);
    for (int i = 0; i < n; ++i) {
        st.f_x[i] = short_term_return(s, k[i], i, st.psi2[i], st.avg_ka, st.avg_r);
        double w = st.mob_scale * std::pow(k[i], P.alpha);
        st.g_x[i] = d.d1[i] * w;
        st.grad_g_x[i] = d.d2[i] * w;
    }
    st.fprime_x.resize(n);
    for (int i = 0; i < n; ++i)
        st.fprime_x[i] = (st.f_x[s.grid.wrap(i + 1)] - st.f_x[s.grid.wrap(i - 1)]) / (2 * h);

    st.corr_x.assign(n, 0.0);
    if (P.include_F_correction && nhat_prev)
        for (int i = 0; i < n; ++i)
            if (!st.deserted[i])
                st.corr_x[i] = correction_term(s, short_term_return_dk(s, k[i], i, st.avg_ka, st.avg_r),
                                               st.psi2[i], (*nhat_prev)[i]);

    st.a_x.resize(n);
    st.big_m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        st.a_x[i] = attractivity(s, st.f_x[i], st.g_x[i], st.grad_g_x[i], st.corr_x[i]);
        if (!st.deserted[i] && st.a_x[i] > st.big_m) {
            st.big_m = st.a_x[i];
            st.argmax = i;
        }
    }

    st.p_x.assign(n, 0.0);
    st.c1_x.assign(n, 0.0);
    std::vector<double> log_w(n, -std::numeric_limits<double>::infinity()), log_first(n, 0.0);
    std::vector<double> act_w;
    for (int i = 0; i < n; ++i) {
        if (st.deserted[i]) continue;
        double af = std::max(std::abs(st.f_x[i]), f_floor);
        st.p_x[i] = i == st.argmax ? 0.0 : (st.big_m - st.a_x[i]) / (P.sigma_xhat2 * af);
        st.c1_x[i] = st.fprime_x[i] == 0.0 ? 0.0 : damping_exponent(s, st.p_x[i], af, st.fprime_x[i]);
        LogMoment lm = pcf_log_moments(st.p_x[i]);
        log_first[i] = lm.log_first;
        log_w[i] = -st.c1_x[i] + 0.5 * std::log(P.sigma_khat2 / af) + lm.log_zeroth;
        act_w.push_back(log_w[i]);
    }
    double lse = log_sum_exp(act_w);
    if (!std::isfinite(lse)) throw NoSolutionError("normalize_c: normalization integral vanishes");
    st.log_c_norm = std::log(P.n_investors / h) - lse;
    st.c_norm = std::exp(st.log_c_norm);

    st.nhat.assign(n, 0.0);
    st.k_target.assign(n, 0.0);
    st.k_x.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (st.deserted[i]) continue;
        double af = std::max(std::abs(st.f_x[i]), f_floor);
        st.nhat[i] = std::exp(st.log_c_norm + log_w[i]);
        st.k_target[i] = std::exp(st.log_c_norm + std::log(P.sigma_khat2) - st.c1_x[i] + log_first[i] -
                                  std::log(af) - std::log(st.psi2[i]));
        st.k_x[i] = k[i];
    }
    return st;
}

FieldSolution solve_collective_state(const Scenario& s, const SolveOptions& opt) {
    const int n = s.size();
    std::vector<double> logk(n, 0.0);
    if (!opt.initial_k.empty()) {
        if (int(opt.initial_k.size()) != n) throw DomainError("solve: initial_k has the wrong length");
        for (int i = 0; i < n; ++i) {
            double k0 = opt.initial_k[i];
            logk[i] = (k0 > 0 && std::isfinite(k0)) ? std::log(k0) : 0.0;
        }
    }
    std::vector<double> k(n), nhat_prev;
    double res = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (int i = 0; i < n; ++i) k[i] = std::exp(logk[i]);
        FieldSolution st = evaluate_state(s, k, nhat_prev.empty() ? nullptr : &nhat_prev, opt.f_floor);
        double upd = 0;
        res = 0;
        bool finite = true;
        std::vector<double> next = logk;
        for (int i = 0; i < n; ++i) {
            if (st.deserted[i]) continue;
            double diff = std::log(st.k_target[i]) - logk[i];
            // an underflowing target still gives a usable capped step; NaN does not
            if (std::isnan(diff)) {
                finite = false;
                break;
            }
            res = std::max(res, std::abs(std::expm1(-diff)));
            double step = std::clamp(opt.damping * diff, -opt.max_log_step, opt.max_log_step);
            upd = std::max(upd, std::abs(step));
            next[i] = logk[i] + step;
        }
        if (!finite) throw NonConvergenceError("solve: iterate left the finite range", res, it);
        if (res < opt.tol_residual && upd < opt.tol_update) {
            for (int i = 0; i < n; ++i)
                if (!st.deserted[i] && std::abs(st.f_x[i]) < opt.f_floor)
                    throw SingularError("solve: |f| below floor at sector " + std::to_string(i));
            st.residual = res;
            st.iterations = it;
            return st;
        }
        nhat_prev = st.nhat;
        logk.swap(next);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "solve: no convergence after %d iterations (residual %.3e)", opt.max_iter, res);
    throw NonConvergenceError(buf, res, opt.max_iter);
}

std::vector<FieldSolution> solve_branches(const Scenario& s, const SolveOptions& opt) {
    const int n = s.size();
    std::vector<std::vector<double>> seeds;
    FieldSolution probe = evaluate_state(s, std::vector<double>(n, 1.0));
    for (CfCase c : {CfCase::case1, CfCase::case2_grad, CfCase::case2_max, CfCase::case3, CfCase::case4}) {
        try {
            auto seed = closed_form_case(s, probe, c);
            for (double& v : seed)
                if (!(v > 0) || !std::isfinite(v)) v = 1.0;
            seeds.push_back(seed);
        } catch (const Error&) {
        }
    }
    seeds.push_back(std::vector<double>(n, 1.0));

    std::vector<FieldSolution> out;
    std::string last_error;
    for (const auto& seed : seeds) {
        SolveOptions o = opt;
        o.initial_k = seed;
        try {
            FieldSolution sol = solve_collective_state(s, o);
            bool dup = false;
            for (const auto& prev : out) {
                double scale = 0, dist = 0;
                for (int i = 0; i < n; ++i) {
                    scale = std::max(scale, std::max(prev.k_x[i], sol.k_x[i]));
                    dist = std::max(dist, std::abs(prev.k_x[i] - sol.k_x[i]));
                }
                if (dist <= 1e-4 * scale) {
                    dup = true;
                    break;
                }
            }
            if (!dup) {
                sol.branch_id = int(out.size());
                out.push_back(std::move(sol));
            }
        } catch (const NonConvergenceError& e) {
            last_error = e.what();
        } catch (const SingularError& e) {
            last_error = e.what();
        }
    }
    if (out.empty()) throw NonConvergenceError("solve_branches: no seed converged; " + last_error, 0, opt.max_iter);
    return out;
}

// ---- local map with frozen globals ----

LocalEval local_map(const Scenario& s, const FieldSolution& sol, int i, double k, double y_shift,
                    double f_shift) {
    const auto& P = s.params;
    LocalEval e;
    LandscapeDerivs d{sol.r1, sol.r2};
    double br = firm_bracket(s, d, k, i);
    e.psi2 = (sol.lagrange_d - br) / (2 * P.tau);
    if (!(e.psi2 > 0)) return e;
    e.active = true;
    e.f = short_term_return(s, k, i, e.psi2, sol.avg_ka, sol.avg_r) + f_shift;
    double w = sol.mob_scale * std::pow(k, P.alpha);
    e.g = sol.r1[i] * w;
    e.grad_g = sol.r2[i] * w;
    e.corr = correction_term(s, short_term_return_dk(s, k, i, sol.avg_ka, sol.avg_r), e.psi2, sol.nhat[i]);
    e.a = attractivity(s, e.f, e.g, e.grad_g, e.corr) + y_shift;
    double af = std::abs(e.f);
    e.p = (sol.big_m - e.a) / (P.sigma_xhat2 * af);
    e.c1 = damping_exponent(s, e.p, af, sol.fprime_x[i]);
    e.log_phi = sol.log_c_norm + std::log(P.sigma_khat2) - e.c1 + pcf_log_moments(e.p).log_first -
                std::log(af) - std::log(e.psi2);
    return e;
}

double local_multiplier(const Scenario& s, const FieldSolution& sol, int i) {
    const auto& P = s.params;
    double k = sol.k_held[i];
    LocalEval e = local_map(s, sol, i, k);
    if (!e.active) throw DomainError("local_multiplier: deserted sector");
    double af = std::abs(e.f);
    if (af < 1e-9) throw SingularError("local_multiplier: |f| below floor");
    double r1 = sol.r1[i], r2 = sol.r2[i];
    double dbr = 0.5 * (1 - P.eta) *
                 (2 * P.eta * r1 * r1 * std::pow(k, 2 * P.eta - 1) + P.eta * P.sigma_x2 * r2 * std::pow(k, P.eta - 1));
    double dpsi2 = -dbr / (2 * P.tau);
    double df = short_term_return_dk(s, k, i, sol.avg_ka, sol.avg_r) - P.gamma * dpsi2 / P.epsilon;
    double sgn = e.f > 0 ? 1.0 : -1.0;
    double daf = sgn * df;
    double dg = P.alpha * e.g / k, dgg = P.alpha * e.grad_g / k;
    double dcorr = 0.0;
    if (P.include_F_correction) {
        double hk = 1e-6 * k;
        double cp = local_map(s, sol, i, k + hk).corr, cm = local_map(s, sol, i, k - hk).corr;
        dcorr = (cp - cm) / (2 * hk);
    }
    double da = 2 * e.g * dg / P.sigma_xhat2 + df + 0.5 * daf + dgg - dcorr;
    double dp = -da / (P.sigma_xhat2 * af) - e.p * daf / af;
    double kappa = e.c1;
    double dlnphi = (dlog_first_dp(e.p) - 2 * kappa / (e.p + 0.5)) * dp - (1 - 3 * kappa) * daf / af - dpsi2 / e.psi2;
    return k * dlnphi;
}

double local_multiplier_fd(const Scenario& s, const FieldSolution& sol, int i, double rel_step) {
    double k = sol.k_held[i];
    double lp = std::log(k * (1 + rel_step)), lm = std::log(k * (1 - rel_step));
    double fp = local_map(s, sol, i, k * (1 + rel_step)).log_phi;
    double fm = local_map(s, sol, i, k * (1 - rel_step)).log_phi;
    return (fp - fm) / (lp - lm);
}

double local_resolve(const Scenario& s, const FieldSolution& sol, int i, double y_shift, double f_shift) {
    double lk = std::log(sol.k_held[i]);
    for (int it = 0; it < 100; ++it) {
        double k = std::exp(lk);
        LocalEval e = local_map(s, sol, i, k, y_shift, f_shift);
        if (!e.active) throw DomainError("local_resolve: sector became deserted");
        double h = e.log_phi - lk;
        double step = 1e-6;
        double ep = local_map(s, sol, i, k * std::exp(step), y_shift, f_shift).log_phi;
        double em = local_map(s, sol, i, k * std::exp(-step), y_shift, f_shift).log_phi;
        double dh = (ep - em) / (2 * step) - 1.0;
        if (dh == 0.0) throw SingularError("local_resolve: flat residual");
        double delta = -h / dh;
        lk += delta;
        if (std::abs(delta) < 1e-14) return std::exp(lk);
    }
    throw ConvergenceError("local_resolve: Newton did not converge");
}

// ---- export ----

namespace {
std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace

std::string solution_csv(const Scenario& s, const FieldSolution& sol) {
    std::string out = "x,k_x,psi2,nhat,f,g,grad_g,p,deserted\n";
    for (int i = 0; i < sol.size(); ++i) {
        out += g17(s.grid.center(i)) + "," + g17(sol.k_x[i]) + "," + g17(sol.psi2[i]) + "," +
               g17(sol.nhat[i]) + "," + g17(sol.f_x[i]) + "," + g17(sol.g_x[i]) + "," +
               g17(sol.grad_g_x[i]) + "," + g17(sol.p_x[i]) + "," + (sol.deserted[i] ? "1" : "0") + "\n";
    }
    return out;
}

std::string solution_json(const FieldSolution& sol) {
    nlohmann::ordered_json j;
    j["lagrange_d"] = sol.lagrange_d;
    j["big_m"] = sol.big_m;
    j["c_norm"] = sol.c_norm;
    j["residual"] = sol.residual;
    j["iterations"] = sol.iterations;
    j["branch_id"] = sol.branch_id;
    return j.dump(2) + "\n";
}

}  // namespace sfe
