#pragma once

#include <map>
#include <string>
#include <vector>

#include "sfe/fieldcore.hpp"

namespace sfe {

enum class Pattern { pattern1, pattern2, pattern3_stable, pattern3_unstable, deserted };
const char* to_string(Pattern p);

struct StabilityReport {
    std::vector<double> stab_denom;  // 1 - K dlnPhi/dK
    std::vector<double> b_crit;      // the multiplier K dlnPhi/dK itself
    std::vector<Pattern> pattern;
    std::map<std::string, std::vector<double>> sensitivities;
};

struct ClassifyOptions {
    double low_quantile = 0.2;
    double high_quantile = 0.8;
    double dominance = 2.0;
    bool with_sensitivities = false;
};

double local_denominator(const Scenario& s, const FieldSolution& sol, int i);

enum class MapVerdict { converges, diverges };
const char* to_string(MapVerdict v);

// iterate the local map 200 times from K_X + perturbation. Converges when the deviation drops
// below 1e-3 of its start, or ends below its start (slow geometric decay).
MapVerdict iterate_map_check(const Scenario& s, const FieldSolution& sol, int i, double perturbation,
                             int steps = 200);
// the same rule on the linear map dK <- multiplier dK
MapVerdict iterate_linear_map(double multiplier, double perturbation, int steps = 200);

enum class SensParam { relative_return_Y, short_term_f_param };
const char* to_string(SensParam p);

// dK/dY from the differential form. Y shifts A (M fixed) or f.
double sensitivity(const Scenario& s, const FieldSolution& sol, int i, SensParam param);
// central difference of the local re-solve with globals frozen
double sensitivity_oracle(const Scenario& s, const FieldSolution& sol, int i, SensParam param,
                          double step = 1e-5);

StabilityReport classify(const Scenario& s, const FieldSolution& sol, const ClassifyOptions& opt = {});

std::string stability_csv(const Scenario& s, const StabilityReport& rep);

}  // namespace sfe
