#pragma once

#include <complex>
#include <string>
#include <vector>

#include "sfe/fieldcore.hpp"

namespace sfe {

// Sign convention: perturbations go as exp(i Omega t + i G x), so Im Omega > 0 means decay.

struct DynCoeffs {
    double k = 0, l = 0, m = 0, n = 0;
    double c1 = 0, c2 = 0, c3 = 0;
};

// C1 = sigma_x2 sigma_khat2 (p+1/2)^2 f'^2 / (96|f|^3), C2 = ln(p+1/2) - 2 C1/(p+1/2),
// C3 = 1 - C1 + (p+3/2) C2
DynCoeffs c_family(const Scenario& s, double p, double f, double fprime);
DynCoeffs dyn_coefficients(const Scenario& s, const FieldSolution& sol, int i);

// the inputs of the dispersion relation at one sector
struct DispersionInputs {
    double k = 0, l = 0, m = 0, n = 0;
    double K = 1, R = 1, dR = 0, d2R = 0;
};
DispersionInputs dispersion_inputs(const Scenario& s, const FieldSolution& sol, int i);

struct DynOptions {
    // keep the second-order entries of the expectation kernel; Omega then solves a quadratic
    bool full_matrix = false;
};

std::complex<double> frequency(const DispersionInputs& in, double g_wave, const ExpectationParams& e,
                               const DynOptions& opt = {});
std::complex<double> frequency(const Scenario& s, const FieldSolution& sol, int i, double g_wave,
                               const ExpectationParams& e, const DynOptions& opt = {});

// (lc/R)(k/K + a0 l/R) + 4 m^2 c a0 G^2 / R'^2
double damping_lhs(const DispersionInputs& in, double g_wave, const ExpectationParams& e);
bool damping_condition(const DispersionInputs& in, double g_wave, const ExpectationParams& e);
bool damping_condition(const Scenario& s, const FieldSolution& sol, int i, double g_wave,
                       const ExpectationParams& e);

// |det| / scale of the first-order system at (Omega, G)
double determinant_residual(const DispersionInputs& in, std::complex<double> omega, double g_wave,
                            const ExpectationParams& e, const DynOptions& opt = {});

// G^2 where the damping left-hand side changes sign; NaN when it never does
double exact_threshold_g2(const DispersionInputs& in, const ExpectationParams& e);
// intermediate-regime approximation built from F1, psi2 and the firm bracket
double stc_threshold_g2(const Scenario& s, const FieldSolution& sol, int i, const ExpectationParams& e);
// the accompanying sign condition a0/R - (1-alpha)/(s K F1) < 0
double stc_condition(const Scenario& s, const FieldSolution& sol, int i, const ExpectationParams& e);

enum class Regime { k_small, k_large_stable, k_large_unstable, intermediate, deserted };
const char* to_string(Regime r);
Regime regime_of(const Scenario& s, const FieldSolution& sol, int i);
// whether the coefficient ordering assumed by the regime's asymptotic verdict holds (factor 10
// for every "much larger"): k_small needs k<0, l>0, |k/K| >> l, |m| << l; k_large_stable k<0,
// l>0, |k/K| << l; k_large_unstable k>0, l>0, |k/K| >> l; intermediate k<0 with the C3/f terms
// of k and m dominant
bool regime_valid(const Scenario& s, const FieldSolution& sol, int i, Regime r);

struct DynamicsReport {
    std::vector<double> g_wave;
    std::vector<std::vector<std::complex<double>>> omega;  // [sector][g]
    std::vector<std::vector<char>> damped;                  // [sector][g]
    std::vector<DynCoeffs> coeffs;
    std::vector<Regime> regime;
    std::vector<char> regime_valid;
    std::vector<std::vector<char>> regime_verdict;  // regime-specific inequality, [sector][g]
    std::vector<double> threshold_g2;      // exact sign change of the damping condition
    std::vector<double> stc_g2;            // approximate intermediate threshold
    std::vector<double> max_residual;
};

std::vector<double> default_g_range();
// "lo:hi:n"; log-spaced when lo > 0, linear otherwise. DomainError when malformed.
std::vector<double> parse_g_range(const std::string& text);

DynamicsReport regime_analysis(const Scenario& s, const FieldSolution& sol, const ExpectationParams& e,
                               const std::vector<double>& g_range, const DynOptions& opt = {});

std::string dynamics_csv(const Scenario& s, const DynamicsReport& rep);
std::string dynamics_json(const Scenario& s, const DynamicsReport& rep);

}  // namespace sfe
