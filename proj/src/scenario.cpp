#include "sfe/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "sfe/errors.hpp"

namespace sfe {

int SectorGrid::wrap(int i) const {
    if (i >= 0 && i < n_sectors) return i;
    if (boundary == Boundary::periodic) return ((i % n_sectors) + n_sectors) % n_sectors;
    // ghost cell mirrors the edge value: R_{-1} = R_0, R_n = R_{n-1}
    return i < 0 ? 0 : n_sectors - 1;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int segment(const std::vector<double>& kx, double x) {
    auto it = std::upper_bound(kx.begin(), kx.end(), x);
    int j = int(it - kx.begin()) - 1;
    return std::clamp(j, 0, int(kx.size()) - 2);
}

}  // namespace

double AnalyticLandscape::value(double x, double x_min, double length) const {
    switch (kind) {
    case LandscapeKind::gaussian_bump: {
        double u = (x - center) / width;
        return base + height * std::exp(-0.5 * u * u);
    }
    case LandscapeKind::cosine:
        return base + amplitude * std::cos(kTwoPi * periods * (x - x_min) / length);
    case LandscapeKind::piecewise_linear: {
        if (x <= knots_x.front()) return knots_r.front();
        if (x >= knots_x.back()) return knots_r.back();
        int j = segment(knots_x, x);
        double t = (x - knots_x[j]) / (knots_x[j + 1] - knots_x[j]);
        return knots_r[j] + t * (knots_r[j + 1] - knots_r[j]);
    }
    case LandscapeKind::none: break;
    }
    return base;
}

double AnalyticLandscape::d1(double x, double x_min, double length) const {
    switch (kind) {
    case LandscapeKind::gaussian_bump: {
        double u = (x - center) / width;
        return -height * u / width * std::exp(-0.5 * u * u);
    }
    case LandscapeKind::cosine: {
        double k = kTwoPi * periods / length;
        return -amplitude * k * std::sin(k * (x - x_min));
    }
    case LandscapeKind::piecewise_linear: {
        if (x < knots_x.front() || x > knots_x.back()) return 0.0;
        int j = segment(knots_x, x);
        return (knots_r[j + 1] - knots_r[j]) / (knots_x[j + 1] - knots_x[j]);
    }
    case LandscapeKind::none: break;
    }
    return 0.0;
}

double AnalyticLandscape::d2(double x, double x_min, double length) const {
    switch (kind) {
    case LandscapeKind::gaussian_bump: {
        double u = (x - center) / width;
        return height / (width * width) * (u * u - 1.0) * std::exp(-0.5 * u * u);
    }
    case LandscapeKind::cosine: {
        double k = kTwoPi * periods / length;
        return -amplitude * k * k * std::cos(k * (x - x_min));
    }
    default: return 0.0;
    }
}

// ---- parsing ----

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_real(const std::string& v, const std::string& key, int line) {
    std::string t = trim(v);
    if (t.empty()) throw ParseError("empty value for " + key, line);
    char* end = nullptr;
    double x = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw ParseError("not a number for " + key + ": '" + t + "'", line);
    return x;
}

std::vector<double> to_reals(const std::string& v, const std::string& key, int line) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(item, key, line));
    if (out.empty()) throw ParseError("empty list for " + key, line);
    return out;
}

bool to_bool(const std::string& v, const std::string& key, int line) {
    std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ParseError("not a boolean for " + key + ": '" + t + "'", line);
}

struct Entry {
    std::string value;
    int line;
};

using Section = std::map<std::string, Entry>;

struct ParamRef {
    const char* name;
    double StructuralParams::*ptr;
};

const ParamRef kParams[] = {
    {"alpha", &StructuralParams::alpha},           {"b", &StructuralParams::b},
    {"gamma", &StructuralParams::gamma},           {"epsilon", &StructuralParams::epsilon},
    {"tau", &StructuralParams::tau},               {"nu", &StructuralParams::nu},
    {"a_f0", &StructuralParams::a_f0},             {"varsigma", &StructuralParams::varsigma},
    {"eta", &StructuralParams::eta},               {"sigma_x2", &StructuralParams::sigma_x2},
    {"sigma_k2", &StructuralParams::sigma_k2},     {"sigma_xhat2", &StructuralParams::sigma_xhat2},
    {"sigma_khat2", &StructuralParams::sigma_khat2}, {"n_firms", &StructuralParams::n_firms},
    {"n_investors", &StructuralParams::n_investors}, {"f2_exponent", &StructuralParams::f2_exponent},
};

struct ExpRef {
    const char* name;
    double ExpectationParams::*ptr;
    bool required;
};

const ExpRef kExpect[] = {
    {"a0", &ExpectationParams::a0, true},         {"b_x2", &ExpectationParams::b_x2, true},
    {"c_t", &ExpectationParams::c_t, true},       {"d_t2", &ExpectationParams::d_t2, true},
    {"f_x2", &ExpectationParams::f_x2, true},     {"h_t2", &ExpectationParams::h_t2, true},
    {"u_xt", &ExpectationParams::u_xt, true},     {"v_xt", &ExpectationParams::v_xt, true},
    {"e_coef", &ExpectationParams::e_coef, false}, {"g_coef", &ExpectationParams::g_coef, false},
    {"a_coef", &ExpectationParams::a_coef, false},
};

const Entry& need(const Section& sec, const std::string& sname, const std::string& key) {
    auto it = sec.find(key);
    if (it == sec.end()) throw ParseError("missing key " + sname + "." + key);
    return it->second;
}

void reject_unknown(const Section& sec, const std::vector<std::string>& known) {
    for (const auto& [k, e] : sec)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ParseError("unknown key '" + k + "'", e.line);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

void resample(Scenario& s) {
    if (!s.landscape.analytic) return;
    const auto& a = *s.landscape.analytic;
    s.landscape.r_values.resize(s.grid.n_sectors);
    for (int i = 0; i < s.grid.n_sectors; ++i)
        s.landscape.r_values[i] = a.value(s.grid.center(i), s.grid.x_min, s.grid.volume());
}

Scenario parse_scenario(const std::string& text) {
    std::map<std::string, Section> secs;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("bad section header", line_no);
            current = trim(line.substr(1, line.size() - 2));
            if (current != "grid" && current != "params" && current != "expectations" &&
                current != "landscape")
                throw ParseError("unknown section [" + current + "]", line_no);
            if (secs.count(current)) throw ParseError("duplicate section [" + current + "]", line_no);
            secs[current];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        if (current.empty()) throw ParseError("key outside of a section", line_no);
        std::string key = trim(line.substr(0, eq));
        if (secs[current].count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
        secs[current][key] = {trim(line.substr(eq + 1)), line_no};
    }
    for (const char* s : {"grid", "params", "expectations", "landscape"})
        if (!secs.count(s)) throw ParseError(std::string("missing section [") + s + "]");

    Scenario sc;
    const Section& g = secs["grid"];
    reject_unknown(g, {"n_sectors", "x_min", "x_max", "boundary"});
    {
        const Entry& e = need(g, "grid", "n_sectors");
        double n = to_real(e.value, "n_sectors", e.line);
        if (n != std::floor(n) || std::fabs(n) > 1e8) throw ParseError("n_sectors must be an integer", e.line);
        sc.grid.n_sectors = int(n);
    }
    sc.grid.x_min = to_real(need(g, "grid", "x_min").value, "x_min", need(g, "grid", "x_min").line);
    sc.grid.x_max = to_real(need(g, "grid", "x_max").value, "x_max", need(g, "grid", "x_max").line);
    if (auto it = g.find("boundary"); it != g.end()) {
        if (it->second.value == "periodic") sc.grid.boundary = Boundary::periodic;
        else if (it->second.value == "reflecting") sc.grid.boundary = Boundary::reflecting;
        else throw ParseError("boundary must be periodic or reflecting", it->second.line);
    }

    const Section& p = secs["params"];
    std::vector<std::string> pk;
    for (const auto& r : kParams) {
        pk.push_back(r.name);
        const Entry& e = need(p, "params", r.name);
        sc.params.*r.ptr = to_real(e.value, r.name, e.line);
    }
    pk.push_back("include_F_correction");
    pk.push_back("productivity");
    {
        const Entry& e = need(p, "params", "include_F_correction");
        sc.params.include_F_correction = to_bool(e.value, "include_F_correction", e.line);
    }
    if (auto it = p.find("productivity"); it != p.end())
        sc.params.productivity = to_real(it->second.value, "productivity", it->second.line);
    reject_unknown(p, pk);

    const Section& x = secs["expectations"];
    std::vector<std::string> xk;
    for (const auto& r : kExpect) {
        xk.push_back(r.name);
        auto it = x.find(r.name);
        if (it == x.end()) {
            if (r.required) throw ParseError(std::string("missing key expectations.") + r.name);
            continue;
        }
        sc.expectations.*r.ptr = to_real(it->second.value, r.name, it->second.line);
    }
    reject_unknown(x, xk);

    const Section& l = secs["landscape"];
    reject_unknown(l, {"r_values", "analytic", "center", "height", "width", "base", "amplitude",
                       "periods", "knots_x", "knots_r", "productivity_values"});
    auto real_or = [&](const char* key, double def) {
        auto it = l.find(key);
        return it == l.end() ? def : to_real(it->second.value, key, it->second.line);
    };
    if (auto it = l.find("analytic"); it != l.end()) {
        AnalyticLandscape a;
        const std::string& kind = it->second.value;
        if (kind == "gaussian-bump") {
            a.kind = LandscapeKind::gaussian_bump;
            a.center = to_real(need(l, "landscape", "center").value, "center", need(l, "landscape", "center").line);
            a.height = to_real(need(l, "landscape", "height").value, "height", need(l, "landscape", "height").line);
            a.width = to_real(need(l, "landscape", "width").value, "width", need(l, "landscape", "width").line);
            a.base = real_or("base", 1.0);
        } else if (kind == "cosine") {
            a.kind = LandscapeKind::cosine;
            a.base = to_real(need(l, "landscape", "base").value, "base", need(l, "landscape", "base").line);
            a.amplitude = to_real(need(l, "landscape", "amplitude").value, "amplitude",
                                  need(l, "landscape", "amplitude").line);
            a.periods = real_or("periods", 1.0);
        } else if (kind == "piecewise-linear") {
            a.kind = LandscapeKind::piecewise_linear;
            a.knots_x = to_reals(need(l, "landscape", "knots_x").value, "knots_x", need(l, "landscape", "knots_x").line);
            a.knots_r = to_reals(need(l, "landscape", "knots_r").value, "knots_r", need(l, "landscape", "knots_r").line);
        } else {
            throw ParseError("unknown analytic descriptor '" + kind + "'", it->second.line);
        }
        sc.landscape.analytic = a;
    }
    if (auto it = l.find("r_values"); it != l.end()) {
        sc.landscape.r_values = to_reals(it->second.value, "r_values", it->second.line);
    } else if (!sc.landscape.analytic) {
        throw ParseError("missing key landscape.r_values");
    }
    if (auto it = l.find("productivity_values"); it != l.end())
        sc.landscape.productivity_values = to_reals(it->second.value, "productivity_values", it->second.line);

    if (sc.landscape.analytic) {
        // descriptor must be well formed before sampling
        const auto& a = *sc.landscape.analytic;
        if (a.kind == LandscapeKind::gaussian_bump && !(a.width > 0))
            throw ValidationError("width", "must be positive");
        if (a.kind == LandscapeKind::piecewise_linear) {
            if (a.knots_x.size() != a.knots_r.size() || a.knots_x.size() < 2)
                throw ValidationError("knots_x", "needs at least two knots matching knots_r");
            for (size_t i = 1; i < a.knots_x.size(); ++i)
                if (!(a.knots_x[i] > a.knots_x[i - 1]))
                    throw ValidationError("knots_x", "must be strictly increasing");
        }
        if (sc.grid.n_sectors >= 3 && sc.grid.x_max > sc.grid.x_min) resample(sc);
    }
    validate(sc);
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open scenario file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

void validate(const Scenario& s) {
    const auto& g = s.grid;
    if (g.n_sectors < 3) throw ValidationError("n_sectors", "at least 3 sectors required");
    if (!std::isfinite(g.x_min) || !std::isfinite(g.x_max) || !(g.x_max > g.x_min))
        throw ValidationError("x_max", "grid needs x_max > x_min");
    const auto& p = s.params;
    for (const auto& r : kParams)
        if (!std::isfinite(p.*r.ptr)) throw ValidationError(r.name, "must be finite");
    if (!(p.alpha > 0 && p.alpha < 1)) throw ValidationError("alpha", "must lie in (0, 1)");
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw ValidationError(name, "must be positive");
    };
    positive(p.epsilon, "epsilon");
    positive(p.tau, "tau");
    positive(p.gamma, "gamma");
    positive(p.n_firms, "n_firms");
    positive(p.n_investors, "n_investors");
    positive(p.sigma_x2, "sigma_x2");
    positive(p.sigma_k2, "sigma_k2");
    positive(p.sigma_xhat2, "sigma_xhat2");
    positive(p.sigma_khat2, "sigma_khat2");
    positive(p.productivity, "productivity");
    for (const auto& r : kExpect)
        if (!std::isfinite(s.expectations.*r.ptr)) throw ValidationError(r.name, "must be finite");
    const auto& rv = s.landscape.r_values;
    if (int(rv.size()) != g.n_sectors) throw ValidationError("r_values", "length must equal n_sectors");
    for (double r : rv)
        if (!(r > 0) || !std::isfinite(r)) throw ValidationError("r_values", "returns must be positive");
    const auto& pv = s.landscape.productivity_values;
    if (!pv.empty()) {
        if (int(pv.size()) != g.n_sectors)
            throw ValidationError("productivity_values", "length must equal n_sectors");
        for (double b : pv)
            if (!(b > 0) || !std::isfinite(b)) throw ValidationError("productivity_values", "must be positive");
    }
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream o;
    o << "[grid]\n";
    o << "n_sectors = " << s.grid.n_sectors << "\n";
    o << "x_min = " << fmt(s.grid.x_min) << "\n";
    o << "x_max = " << fmt(s.grid.x_max) << "\n";
    o << "boundary = " << (s.grid.boundary == Boundary::periodic ? "periodic" : "reflecting") << "\n\n";
    o << "[params]\n";
    for (const auto& r : kParams) o << r.name << " = " << fmt(s.params.*r.ptr) << "\n";
    o << "include_F_correction = " << (s.params.include_F_correction ? "true" : "false") << "\n";
    o << "productivity = " << fmt(s.params.productivity) << "\n\n";
    o << "[expectations]\n";
    for (const auto& r : kExpect) o << r.name << " = " << fmt(s.expectations.*r.ptr) << "\n";
    o << "\n[landscape]\n";
    if (s.landscape.analytic) {
        const auto& a = *s.landscape.analytic;
        switch (a.kind) {
        case LandscapeKind::gaussian_bump:
            o << "analytic = gaussian-bump\ncenter = " << fmt(a.center) << "\nheight = " << fmt(a.height)
              << "\nwidth = " << fmt(a.width) << "\nbase = " << fmt(a.base) << "\n";
            break;
        case LandscapeKind::cosine:
            o << "analytic = cosine\nbase = " << fmt(a.base) << "\namplitude = " << fmt(a.amplitude)
              << "\nperiods = " << fmt(a.periods) << "\n";
            break;
        case LandscapeKind::piecewise_linear:
            o << "analytic = piecewise-linear\nknots_x = " << fmt_list(a.knots_x)
              << "\nknots_r = " << fmt_list(a.knots_r) << "\n";
            break;
        case LandscapeKind::none: break;
        }
    } else {
        o << "r_values = " << fmt_list(s.landscape.r_values) << "\n";
    }
    if (!s.landscape.productivity_values.empty())
        o << "productivity_values = " << fmt_list(s.landscape.productivity_values) << "\n";
    return o.str();
}

LandscapeDerivs fd_derivatives(const Scenario& s) {
    const auto& g = s.grid;
    const auto& r = s.landscape.r_values;
    int n = g.n_sectors;
    double h = g.spacing();
    LandscapeDerivs d{std::vector<double>(n), std::vector<double>(n)};
    for (int i = 0; i < n; ++i) {
        double rm = r[g.wrap(i - 1)], rp = r[g.wrap(i + 1)];
        d.d1[i] = (rp - rm) / (2 * h);
        d.d2[i] = (rp - 2 * r[i] + rm) / (h * h);
    }
    return d;
}

LandscapeDerivs landscape_derivatives(const Scenario& s) {
    if (!s.landscape.analytic) return fd_derivatives(s);
    const auto& a = *s.landscape.analytic;
    int n = s.grid.n_sectors;
    LandscapeDerivs d{std::vector<double>(n), std::vector<double>(n)};
    for (int i = 0; i < n; ++i) {
        double x = s.grid.center(i);
        d.d1[i] = a.d1(x, s.grid.x_min, s.grid.volume());
        d.d2[i] = a.d2(x, s.grid.x_min, s.grid.volume());
    }
    return d;
}

std::vector<std::string> param_names() {
    std::vector<std::string> out;
    for (const auto& r : kParams) out.push_back(r.name);
    out.push_back("productivity");
    return out;
}

bool set_param(Scenario& s, const std::string& name, double value) {
    for (const auto& r : kParams)
        if (name == r.name) {
            s.params.*r.ptr = value;
            return true;
        }
    if (name == "productivity") {
        s.params.productivity = value;
        return true;
    }
    return false;
}

bool get_param(const Scenario& s, const std::string& name, double* value) {
    for (const auto& r : kParams)
        if (name == r.name) {
            *value = s.params.*r.ptr;
            return true;
        }
    if (name == "productivity") {
        *value = s.params.productivity;
        return true;
    }
    return false;
}

}  // namespace sfe
