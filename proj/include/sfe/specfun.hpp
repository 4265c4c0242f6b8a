#pragma once

#include <functional>

namespace sfe {

struct PcfMoment {
    double p;
    double zeroth;  // int_0^inf D_p(z)^2 dz
    double first;   // int_0^inf z D_p(z)^2 dz
};

double gamma(double x);
double digamma(double x);
double lambert_w(int branch, double x);

// parabolic cylinder function D_p(z), real order and argument
double pcf_d(double p, double z);

struct LogMoment {
    double p;
    double log_zeroth;
    double log_first;
};

// closed forms; throws PoleError near a singular factor
PcfMoment pcf_moments(double p);
// adaptive quadrature of the same integrals, valid for any real p
PcfMoment pcf_moments_quad(double p);
// closed form when safe, quadrature otherwise
PcfMoment pcf_moments_any(double p);

// logs of the same moments from pole-free rearrangements; any real p >= -3 or so,
// no overflow for large p. first moment uses int z D^2 = 2 (D'(0)^2 + (p+1/2) D(0)^2)
LogMoment pcf_log_moments(double p);

// smaller positive root of x^d exp(-a x) = c
double solve_power_exp(double d, double a, double c);

// adaptive Gauss-Kronrod (7-15) on [lo, hi]
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double rel_tol = 1e-13, double abs_tol = 0.0);

constexpr double kEulerGamma = 0.57721566490153286061;

}  // namespace sfe
