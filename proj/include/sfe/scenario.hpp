#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sfe {

enum class Boundary { periodic, reflecting };

struct SectorGrid {
    int n_sectors = 0;
    double x_min = 0.0;
    double x_max = 1.0;
    Boundary boundary = Boundary::periodic;

    double spacing() const { return (x_max - x_min) / n_sectors; }
    double volume() const { return x_max - x_min; }
    double center(int i) const { return x_min + (i + 0.5) * spacing(); }
    // neighbour index with the boundary rule; reflecting grids mirror onto the edge cell
    int wrap(int i) const;
};

enum class LandscapeKind { none, gaussian_bump, cosine, piecewise_linear };

struct AnalyticLandscape {
    LandscapeKind kind = LandscapeKind::none;
    // gaussian-bump: base + height * exp(-(x-center)^2 / (2 width^2))
    double center = 0.0, height = 0.0, width = 1.0;
    // cosine: base + amplitude * cos(2 pi periods (x - x_min) / L)
    double amplitude = 0.0, periods = 1.0;
    double base = 1.0;
    std::vector<double> knots_x, knots_r;

    double value(double x, double x_min, double length) const;
    double d1(double x, double x_min, double length) const;
    double d2(double x, double x_min, double length) const;
};

struct ReturnLandscape {
    std::vector<double> r_values;
    std::optional<AnalyticLandscape> analytic;
    // per-sector productivity B(X); empty means the scalar `productivity` param
    std::vector<double> productivity_values;
};

struct StructuralParams {
    double alpha = 0.5;
    double b = 0.0;
    double gamma = 0.0;
    double epsilon = 0.1;
    double tau = 1.0;
    double nu = 0.0;
    double a_f0 = 0.0;
    double varsigma = 1.0;
    double eta = 0.0;
    double sigma_x2 = 1e-4;
    double sigma_k2 = 1.0;
    double sigma_xhat2 = 1.0;
    double sigma_khat2 = 1.0;
    double n_firms = 100.0;
    double n_investors = 400.0;
    double f2_exponent = 1.0;
    bool include_F_correction = false;
    double productivity = 1.0;
};

// kernel coefficients of the expectation response; field names avoid the f, g clash
struct ExpectationParams {
    double a0 = 1.0;
    double b_x2 = 0.0;
    double c_t = 1.0;
    double d_t2 = 0.0;
    double f_x2 = 0.0;
    double h_t2 = 0.0;
    double u_xt = 0.0;
    double v_xt = 0.0;
    double e_coef = 0.0;
    double g_coef = 0.0;
    double a_coef = 0.0;
};

struct Scenario {
    SectorGrid grid;
    ReturnLandscape landscape;
    StructuralParams params;
    ExpectationParams expectations;

    int size() const { return grid.n_sectors; }
    double productivity(int i) const {
        return landscape.productivity_values.empty() ? params.productivity
                                                     : landscape.productivity_values[i];
    }
};

struct LandscapeDerivs {
    std::vector<double> d1;  // dR/dx
    std::vector<double> d2;  // d2R/dx2
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& s);

// throws ValidationError naming the first offending field
void validate(const Scenario& s);

// analytic derivatives when a descriptor exists, central differences otherwise
LandscapeDerivs landscape_derivatives(const Scenario& s);
// always central differences on r_values
LandscapeDerivs fd_derivatives(const Scenario& s);

// named access for sweeps; returns false for an unknown name
bool set_param(Scenario& s, const std::string& name, double value);
bool get_param(const Scenario& s, const std::string& name, double* value);
std::vector<std::string> param_names();

// resample r_values from the analytic descriptor (no-op without one)
void resample(Scenario& s);

}  // namespace sfe
