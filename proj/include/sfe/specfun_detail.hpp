#pragma once

namespace sfe::detail {

struct LogAbs {
    double log;  // log |value|
    int sign;    // 0 at poles
};

LogAbs lgamma_signed(double x);
double rgamma(double x);  // 1/Gamma, zero at the poles of Gamma
// log|sa e^la + sb e^lb| with the sign written to *sign
double log_sum_signed(double la, int sa, double lb, int sb, int* sign);

}  // namespace sfe::detail
