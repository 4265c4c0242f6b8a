#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sfe/fieldcore.hpp"

namespace sfe {

struct AgentPopulation {
    std::vector<double> firm_x, firm_k;
    std::vector<double> inv_x, inv_k;
    std::uint64_t rng_seed = 0;
    long step_count = 0;
    std::mt19937_64 rng;
    // cell of each firm when firm_k was last allocated
    std::vector<int> firm_cell;
    // |sum firm_k - sum inv_k| / sum inv_k at the latest allocation
    double conservation_error = 0.0;
    // investors whose wealth step crossed zero and was reflected
    long shortfall_events = 0;
};

struct AbmOptions {
    double dt = 0.002;
    int threads = 1;
};

// positions uniform on the grid; capital at the field solution when given, else 1
AgentPopulation init_population(const Scenario& s, std::uint64_t seed, const FieldSolution* sol = nullptr);

// cell index of a position
int cell_of(const Scenario& s, double x);

// one synchronous update: allocate, pay returns, move
void step(AgentPopulation& pop, const Scenario& s, double dt);

struct AbmComparison {
    int seeds = 0;
    long steps = 0, burn_in = 0;
    std::vector<double> mean_k, se_k;          // per sector, averaged over time then seeds
    std::vector<double> mean_count, se_count;  // firms per cell
    std::vector<double> field_k, field_count;
    std::vector<double> rel_dev_k, rel_dev_count;
    double max_conservation_error = 0.0;
    long shortfall_events = 0;
    double max_abs_rel_dev_k() const;
    double max_abs_rel_dev_count() const;
};

// steps counts every update; the averages use the ones after burn_in
AbmComparison run_and_compare(const Scenario& s, const FieldSolution& sol, long steps, long burn_in,
                              int seeds, const AbmOptions& opt = {});

std::string comparison_csv(const Scenario& s, const AbmComparison& c);
// per-sector time series of one seed, sampled every `every` steps
std::string trajectory_csv(const Scenario& s, const FieldSolution* sol, std::uint64_t seed, long steps,
                           long every, double dt);

}  // namespace sfe
