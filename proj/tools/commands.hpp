#pragma once

#include <string>
#include <vector>

namespace sfe::cli {

struct CommonArgs {
    std::string command;
    std::string scenario;
    std::string out;
    std::string format = "csv";
    int threads = 0;  // 0: SFE_THREADS or 1
    int max_iter = 20000;
    std::vector<std::string> argv;
};

struct StabilityArgs {
    bool sensitivities = false;
};

struct DynamicsArgs {
    std::string g_range;  // empty: default range
    bool full_matrix = false;
};

struct AbmArgs {
    int seeds = 5;
    long steps = 2000;  // recorded steps, after burn-in
    long burn_in = 500;
    double dt = 0.002;
};

struct SweepArgs {
    std::string param;
    std::string values;
};

struct RunManifest {
    std::string command, scenario_path, output_dir, tool_version, scenario_hash;
    double wall_time_s = 0;
    int exit_code = 0;
    std::vector<std::string> outputs;
};

std::string sha256_file(const std::string& path);
int resolve_threads(int requested);

// each returns the process exit code: 0 ok, 1 input error, 2 numerical non-convergence
int cmd_solve(const CommonArgs& a);
int cmd_stability(const CommonArgs& a, const StabilityArgs& s);
int cmd_dynamics(const CommonArgs& a, const DynamicsArgs& d);
int cmd_abm(const CommonArgs& a, const AbmArgs& m);
int cmd_sweep(const CommonArgs& a, const SweepArgs& w);

}  // namespace sfe::cli
