#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sfe/scenario.hpp"

namespace sfe {

struct SolveOptions {
    int max_iter = 20000;
    double damping = 0.5;
    double tol_update = 1e-10;
    double tol_residual = 1e-8;
    double f_floor = 1e-9;
    double max_log_step = 1.0;  // cap on |change of ln K| per sweep
    std::vector<double> initial_k;  // empty: K = 1 everywhere
};

struct FieldSolution {
    std::vector<double> k_x;     // reported capital, 0 on deserted sectors
    std::vector<double> k_held;  // iterate value, kept on deserted sectors for the bracket
    std::vector<double> k_target;  // right-hand side of the capital equation at k_held
    std::vector<double> psi2, nhat, f_x, g_x, grad_g_x, p_x;
    std::vector<double> a_x, fprime_x, c1_x, corr_x, bracket_x;
    std::vector<double> r, r1, r2;
    std::vector<char> deserted;
    double lagrange_d = 0, big_m = 0, c_norm = 0, log_c_norm = 0;
    double avg_ka = 0, avg_r = 0, mob_scale = 0;
    double residual = 0;
    int iterations = 0;
    int branch_id = 0;
    int argmax = 0;

    int size() const { return int(k_x.size()); }
    int active_count() const;
};

// f = (1/eps)(alpha B K^(alpha-1) - gamma psi2 + b atan(K^alpha R/(<K^alpha><R>) - 1))
double short_term_return(const Scenario& s, double k, int i, double psi2, double avg_ka, double avg_r);
// d f / d K with psi2 held fixed
double short_term_return_dk(const Scenario& s, double k, int i, double avg_ka, double avg_r);

// prefactor A_g in g = R' A_g K^alpha, grad g = R'' A_g K^alpha
double mobility_scale(const StructuralParams& p, double avg_ka, double avg_r);
std::pair<double, double> mobility(const Scenario& s, const LandscapeDerivs& d, double k, int i,
                                   double avg_ka, double avg_r);

// the bracket 1/2 (1-eta)((R')^2 K^(2eta) + sigma_x2 R'' K^eta); psi2 = max(0, (D - bracket)/(2 tau))
double firm_bracket(const Scenario& s, const LandscapeDerivs& d, double k, int i);
std::vector<double> firm_density(const Scenario& s, const std::vector<double>& k, double lagrange_d);

struct Calibration {
    double lagrange_d = 0;
    std::vector<char> deserted;
};
Calibration calibrate_lagrange(const Scenario& s, const std::vector<double>& k);
Calibration calibrate_from_brackets(const Scenario& s, const std::vector<double>& bracket);

double attractivity(const Scenario& s, double f, double g, double grad_g, double corr = 0.0);
double relative_attractivity(const Scenario& s, double big_m, double a, double f, double f_floor = 1e-9);

// sigma_x2 sigma_khat2 (p+1/2)^2 f'^2 / (96 |f|^3)
double damping_exponent(const Scenario& s, double p, double f, double fprime);
double gamma_hat(const Scenario& s, double p, double f, double fprime);
double log_gamma_hat(const Scenario& s, double p, double f, double fprime);
// d ln(first moment)/dp
double dlog_first_dp(double p);

// C such that spacing * sum over active sectors of the investor counts equals n_investors
double normalize_c(const Scenario& s, const std::vector<double>& p, const std::vector<double>& f,
                   const std::vector<double>& fprime, const std::vector<char>& deserted);

// density of investors holding capital khat at sector i. The default damping matches the
// capital equation; pointwise uses exp(-sigma_x2 khat^4 f'^2/(96 sigma_khat2 |f|)).
double investor_density(const Scenario& s, const FieldSolution& sol, double khat, int i,
                        bool pointwise_damping = false);
// shift added to khat in the investor profile, zero unless the correction is enabled
double investor_shift(const Scenario& s, const FieldSolution& sol, int i);

// one pass of the self-consistent map: every field quantity at the given K; k_target
// holds the capital implied by the capital equation.
FieldSolution evaluate_state(const Scenario& s, const std::vector<double>& k,
                             const std::vector<double>* nhat_prev = nullptr, double f_floor = 1e-9);

FieldSolution solve_collective_state(const Scenario& s, const SolveOptions& opt = {});
// multi-start from the closed-form seeds plus K = 1; branches de-duplicated at 1e-4
std::vector<FieldSolution> solve_branches(const Scenario& s, const SolveOptions& opt = {});

// local map K -> Phi(K) at sector i with every global (M, C, D, averages, f') frozen
struct LocalEval {
    bool active = false;
    double log_phi = 0;
    double psi2 = 0, f = 0, g = 0, grad_g = 0, corr = 0, a = 0, p = 0, c1 = 0;
};
// y_shift is added to A, f_shift to f
LocalEval local_map(const Scenario& s, const FieldSolution& sol, int i, double k,
                    double y_shift = 0.0, double f_shift = 0.0);
// K d ln Phi / dK at the solution, from the analytic derivative chain
double local_multiplier(const Scenario& s, const FieldSolution& sol, int i);
// the same quantity by central differences of local_map (test oracle)
double local_multiplier_fd(const Scenario& s, const FieldSolution& sol, int i, double rel_step = 1e-6);
// fixed point of the local map near K_X after shifting A or f
double local_resolve(const Scenario& s, const FieldSolution& sol, int i, double y_shift, double f_shift);

enum class CfCase { case1, case2_grad, case2_max, case3, case4 };
const char* to_string(CfCase c);

// per-sector closed-form capital with the globals of a solved state; RegimeError when a
// sector leaves the case's domain
std::vector<double> closed_form_case(const Scenario& s, const FieldSolution& sol, CfCase c);
// globals from a converged solve when available, otherwise from the state at K = 1
std::vector<double> closed_form_case(const Scenario& s, CfCase c);

struct Case4Inputs {
    double alpha, b2, b2_prime, c_norm, d_level, p_bar, sigma_x2, sigma_khat2;
};
struct Case4Terms {
    double d, a, c, x;  // x = K^alpha solving x^d exp(-a x) = c
};
Case4Terms case4_terms(const Case4Inputs& in);
double qtn_residual(const Case4Terms& t);

struct PeakExpansion {
    int peak = 0;
    std::vector<double> first;   // first-order prediction of K - K_peak
    std::vector<double> second;  // first plus the quadratic term
    std::vector<double> actual;  // solver K - K_peak
};
// 2 - ln 2 - Euler gamma
double expansion_constant();
PeakExpansion expansion_at_peak(const Scenario& s, const FieldSolution& sol);

std::string solution_csv(const Scenario& s, const FieldSolution& sol);
std::string solution_json(const FieldSolution& sol);

}  // namespace sfe
