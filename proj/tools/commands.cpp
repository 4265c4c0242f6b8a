#include "commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sfe/abm.hpp"
#include "sfe/dynamics.hpp"
#include "sfe/errors.hpp"
#include "sfe/fieldcore.hpp"
#include "sfe/scenario.hpp"
#include "sfe/stability.hpp"

#ifndef SFE_VERSION
#define SFE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace sfe::cli {

namespace {

struct InputError : Error {
    using Error::Error;
};

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + p.string());
    f << body;
    if (!f) throw InputError("write failed: " + p.string());
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

// CSV table as {"columns": [...], "rows": [[...], ...]}; numeric cells become numbers
json csv_to_json(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    json j;
    std::getline(in, line);
    j["columns"] = split(line, ',');
    json rows = json::array();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json row = json::array();
        for (const auto& cell : split(line, ',')) {
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (!cell.empty() && end == cell.c_str() + cell.size()) {
                if (std::isfinite(v)) row.push_back(v);
                else row.push_back(nullptr);
            } else {
                row.push_back(cell);
            }
        }
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

std::string plot_script(const std::string& table, const std::string& format, const std::string& xcol,
                        const std::vector<std::string>& ycols, const std::string& group = "") {
    std::string s = "# regenerate the figure with: python " + std::string("plot_") + table + ".py\n";
    s += "import csv, json, sys\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n";
    if (format == "json") {
        s += "t = json.load(open('" + table + ".json'))\n";
        s += "rows = [dict(zip(t['columns'], r)) for r in t['rows']]\n";
    } else {
        s += "rows = list(csv.DictReader(open('" + table + ".csv')))\n";
    }
    s += "def num(v):\n    try:\n        return float(v)\n    except (TypeError, ValueError):\n        return float('nan')\n";
    s += "groups = {}\nfor r in rows:\n";
    s += group.empty() ? "    groups.setdefault('', []).append(r)\n"
                       : "    groups.setdefault(str(r['" + group + "']), []).append(r)\n";
    s += "ycols = [";
    for (size_t i = 0; i < ycols.size(); ++i) s += (i ? ", '" : "'") + ycols[i] + "'";
    s += "]\nfig, axes = plt.subplots(len(ycols), 1, figsize=(6, 2.5 * len(ycols)), squeeze=False)\n";
    s += "for ax, y in zip(axes[:, 0], ycols):\n";
    s += "    for g, rs in groups.items():\n";
    s += "        ax.plot([num(r['" + xcol + "']) for r in rs], [num(r[y]) for r in rs], label=g or None)\n";
    s += "    ax.set_xlabel('" + xcol + "')\n    ax.set_ylabel(y)\n";
    s += "    if len(groups) > 1:\n        ax.legend(fontsize=6)\n";
    s += "fig.tight_layout()\nfig.savefig('" + table + ".png', dpi=120)\n";
    return s;
}

struct Run {
    const CommonArgs& args;
    fs::path out;
    RunManifest manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    explicit Run(const CommonArgs& a) : args(a) {
        manifest.command = a.command;
        manifest.scenario_path = a.scenario;
        manifest.output_dir = a.out;
        manifest.tool_version = SFE_VERSION;
    }

    void emit(const std::string& name, const std::string& body) {
        write_file(out / name, body);
        manifest.outputs.push_back(name);
    }

    // the tabular report in the selected format, plus a plotting script for it
    void emit_table(const std::string& table, const std::string& csv, const std::string& xcol,
                    const std::vector<std::string>& ycols, const std::string& group = "") {
        if (args.format == "json") emit(table + ".json", csv_to_json(csv).dump(2) + "\n");
        else emit(table + ".csv", csv);
        emit("plot_" + table + ".py", plot_script(table, args.format, xcol, ycols, group));
    }

    void write_manifest() {
        manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::time_t now = std::time(nullptr);
        char ts[32];
        std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        json j;
        j["command"] = manifest.command;
        j["scenario_path"] = manifest.scenario_path;
        j["output_dir"] = manifest.output_dir;
        j["tool_version"] = manifest.tool_version;
        j["scenario_hash"] = manifest.scenario_hash;
        j["wall_time_s"] = manifest.wall_time_s;
        j["finished_at"] = ts;
        j["threads"] = resolve_threads(args.threads);
        j["exit_code"] = manifest.exit_code;
        j["arguments"] = args.argv;
        j["outputs"] = manifest.outputs;
        write_file(out / "manifest.json", j.dump(2) + "\n");
    }
};

Scenario load(Run& r) {
    if (!fs::is_regular_file(r.args.scenario)) throw InputError("scenario file not found: " + r.args.scenario);
    r.manifest.scenario_hash = sha256_file(r.args.scenario);
    Scenario s = load_scenario(r.args.scenario);
    validate(s);
    return s;
}

FieldSolution solve(const Scenario& s, const CommonArgs& a, std::vector<double> initial = {}) {
    SolveOptions opt;
    opt.max_iter = a.max_iter;
    opt.initial_k = std::move(initial);
    return solve_collective_state(s, opt);
}

void report_nonconvergence(Run& r, const NonConvergenceError& e) {
    json j;
    j["error"] = e.what();
    j["residual"] = e.residual;
    j["iterations"] = e.iterations;
    try {
        r.emit("residual.json", j.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    std::cerr << "error: " << e.what() << "\n";
}

// shared frame: output dir, error mapping, manifest
int guarded(const CommonArgs& a, const std::function<void(Run&)>& body) {
    Run r(a);
    int code = 0;
    bool have_out = false;
    try {
        if (a.format != "csv" && a.format != "json") throw InputError("--format must be csv or json");
        r.out = a.out;
        std::error_code ec;
        fs::create_directories(r.out, ec);
        if (ec || !fs::is_directory(r.out)) throw InputError("cannot create output directory " + a.out);
        have_out = true;
        body(r);
    } catch (const NonConvergenceError& e) {
        report_nonconvergence(r, e);
        code = 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << a.scenario << ": " << e.what() << "\n";
        code = 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: invalid scenario: " << e.what() << "\n";
        code = 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = 1;
    } catch (const Error& e) {
        // singular or empty states reached during the numerics
        std::cerr << "error: " << e.what() << "\n";
        code = 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = 1;
    }
    r.manifest.exit_code = code;
    if (have_out) {
        try {
            r.write_manifest();
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            if (code == 0) code = 1;
        }
    }
    return code;
}

}  // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[65536];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) EVP_DigestUpdate(ctx, buf, size_t(f.gcount()));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char h[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(h, sizeof h, "%02x", md[i]);
        hex += h;
    }
    return hex;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SFE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

int cmd_solve(const CommonArgs& a) {
    return guarded(a, [](Run& r) {
        Scenario s = load(r);
        FieldSolution sol = solve(s, r.args);
        r.emit("solution_summary.json", solution_json(sol));
        r.emit_table("solution", solution_csv(s, sol), "x", {"k_x", "psi2", "p"});
    });
}

int cmd_stability(const CommonArgs& a, const StabilityArgs& st) {
    return guarded(a, [&](Run& r) {
        Scenario s = load(r);
        FieldSolution sol = solve(s, r.args);
        ClassifyOptions opt;
        opt.with_sensitivities = st.sensitivities;
        StabilityReport rep = classify(s, sol, opt);
        r.emit_table("stability", stability_csv(s, rep), "x", {"stab_denom"});
    });
}

int cmd_dynamics(const CommonArgs& a, const DynamicsArgs& d) {
    return guarded(a, [&](Run& r) {
        std::vector<double> g = d.g_range.empty() ? default_g_range() : parse_g_range(d.g_range);
        Scenario s = load(r);
        FieldSolution sol = solve(s, r.args);
        DynOptions opt;
        opt.full_matrix = d.full_matrix;
        DynamicsReport rep = regime_analysis(s, sol, s.expectations, g, opt);
        r.emit("dynamics_summary.json", dynamics_json(s, rep));
        r.emit_table("dynamics", dynamics_csv(s, rep), "G", {"im_omega"}, "x");
    });
}

int cmd_abm(const CommonArgs& a, const AbmArgs& m) {
    return guarded(a, [&](Run& r) {
        if (m.seeds < 1) throw InputError("--seeds must be at least 1");
        if (m.steps < 1 || m.burn_in < 0) throw InputError("--steps must be positive and --burn-in non-negative");
        if (!(m.dt > 0)) throw InputError("--dt must be positive");
        Scenario s = load(r);
        FieldSolution sol = solve(s, r.args);
        AbmOptions opt;
        opt.dt = m.dt;
        opt.threads = resolve_threads(r.args.threads);
        AbmComparison c = run_and_compare(s, sol, m.steps + m.burn_in, m.burn_in, m.seeds, opt);
        json j;
        j["seeds"] = c.seeds;
        j["steps"] = c.steps - c.burn_in;
        j["burn_in"] = c.burn_in;
        j["dt"] = m.dt;
        j["max_abs_rel_dev_k"] = c.max_abs_rel_dev_k();
        j["max_abs_rel_dev_count"] = c.max_abs_rel_dev_count();
        j["max_conservation_error"] = c.max_conservation_error;
        j["shortfall_events"] = c.shortfall_events;
        r.emit("abm_summary.json", j.dump(2) + "\n");
        r.emit_table("abm", comparison_csv(s, c), "x", {"abm_k", "field_k", "abm_count", "field_count"});
    });
}

int cmd_sweep(const CommonArgs& a, const SweepArgs& w) {
    return guarded(a, [&](Run& r) {
        std::vector<std::string> names = param_names();
        if (std::find(names.begin(), names.end(), w.param) == names.end())
            throw InputError("unknown parameter '" + w.param + "'");
        std::vector<double> values;
        for (const auto& tok : split(w.values, ',')) {
            std::string t = trim(tok);
            if (t.empty()) continue;
            char* end = nullptr;
            double v = std::strtod(t.c_str(), &end);
            if (end != t.c_str() + t.size() || !std::isfinite(v)) throw InputError("bad sweep value '" + t + "'");
            values.push_back(v);
        }
        if (values.empty()) throw InputError("--values is empty");
        Scenario base = load(r);
        // every value must give a valid scenario before any solve starts
        for (double v : values) {
            Scenario s = base;
            set_param(s, w.param, v);
            validate(s);
        }

        std::string body;
        json blocks = json::array();
        std::vector<double> warm;
        int converged = 0;
        for (double v : values) {
            Scenario s = base;
            set_param(s, w.param, v);
            std::string status = "converged";
            std::string rows;
            json blk;
            blk["value"] = v;
            try {
                FieldSolution sol = solve(s, r.args, warm);
                warm = sol.k_held;
                rows = solution_csv(s, sol);
                blk["iterations"] = sol.iterations;
                blk["residual"] = sol.residual;
                ++converged;
            } catch (const NonConvergenceError& e) {
                status = "nonconverged";
                blk["residual"] = e.residual;
                blk["iterations"] = e.iterations;
            } catch (const Error& e) {
                status = "failed";
                blk["error"] = e.what();
            }
            blk["status"] = status;
            blocks.push_back(blk);
            std::vector<std::string> lines = split(rows, '\n');
            if (body.empty()) body = "param,value,status," + std::string("x,k_x,psi2,nhat,f,g,grad_g,p,deserted\n");
            if (status == "converged") {
                for (size_t i = 1; i < lines.size(); ++i)
                    if (!lines[i].empty()) body += w.param + "," + g17(v) + "," + status + "," + lines[i] + "\n";
            } else {
                for (int i = 0; i < s.size(); ++i)
                    body += w.param + "," + g17(v) + "," + status + "," + g17(s.grid.center(i)) +
                            ",nan,nan,nan,nan,nan,nan,nan,nan\n";
            }
        }
        json j;
        j["param"] = w.param;
        j["blocks"] = blocks;
        r.emit("sweep_summary.json", j.dump(2) + "\n");
        r.emit_table("sweep", body, "x", {"k_x"}, "value");
        if (converged == 0) throw NonConvergenceError("sweep: no value converged", std::nan(""), 0);
    });
}

}  // namespace sfe::cli
