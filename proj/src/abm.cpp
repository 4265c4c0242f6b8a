#include "sfe/abm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "sfe/errors.hpp"

namespace sfe {

int cell_of(const Scenario& s, double x) {
    const auto& g = s.grid;
    int c = int(std::floor((x - g.x_min) / g.spacing()));
    return std::clamp(c, 0, g.n_sectors - 1);
}

namespace {

double place(const Scenario& s, double x) {
    const auto& g = s.grid;
    double L = g.x_max - g.x_min;
    if (g.boundary == Boundary::periodic) {
        double y = std::fmod(x - g.x_min, L);
        if (y < 0) y += L;
        return g.x_min + y;
    }
    // fold into [x_min, x_max] as many times as needed
    double y = std::fmod(x - g.x_min, 2 * L);
    if (y < 0) y += 2 * L;
    if (y > L) y = 2 * L - y;
    return g.x_min + y;
}

// nearest cell holding at least one firm, in grid steps; ties go left
std::vector<int> nearest_occupied(const Scenario& s, const std::vector<int>& count) {
    const int n = s.size();
    const bool periodic = s.grid.boundary == Boundary::periodic;
    std::vector<int> out(n, -1);
    for (int c = 0; c < n; ++c) {
        if (count[c] > 0) {
            out[c] = c;
            continue;
        }
        for (int d = 1; d < n && out[c] < 0; ++d) {
            for (int cand : {c - d, c + d}) {
                if (periodic) cand = ((cand % n) + n) % n;
                else if (cand < 0 || cand >= n) continue;
                if (count[cand] > 0) {
                    out[c] = cand;
                    break;
                }
            }
        }
    }
    return out;
}

struct Landscape {
    std::vector<double> r, r1;
};

Landscape landscape_of(const Scenario& s) {
    Landscape l;
    l.r = s.landscape.r_values;
    if (l.r.empty() && s.landscape.analytic) {
        double L = s.grid.x_max - s.grid.x_min;
        for (int i = 0; i < s.size(); ++i)
            l.r.push_back(s.landscape.analytic->value(s.grid.center(i), s.grid.x_min, L));
    }
    l.r1 = landscape_derivatives(s).d1;
    return l;
}

}  // namespace

AgentPopulation init_population(const Scenario& s, std::uint64_t seed, const FieldSolution* sol) {
    const auto& P = s.params;
    long n_f = std::lround(P.n_firms), n_i = std::lround(P.n_investors);
    if (n_f < 1 || n_i < 1) throw DomainError("init_population: need at least one firm and one investor");
    AgentPopulation pop;
    pop.rng_seed = seed;
    pop.rng.seed(seed);
    std::uniform_real_distribution<double> ux(s.grid.x_min, s.grid.x_max);
    pop.firm_x.resize(n_f);
    pop.firm_k.resize(n_f);
    pop.inv_x.resize(n_i);
    pop.inv_k.resize(n_i);
    for (long i = 0; i < n_f; ++i) {
        pop.firm_x[i] = ux(pop.rng);
        pop.firm_k[i] = sol ? sol->k_x[cell_of(s, pop.firm_x[i])] : 1.0;
    }
    double ratio = P.n_firms / P.n_investors;
    for (long j = 0; j < n_i; ++j) {
        pop.inv_x[j] = ux(pop.rng);
        pop.inv_k[j] = sol ? sol->k_x[cell_of(s, pop.inv_x[j])] * ratio : 1.0;
    }
    return pop;
}

void step(AgentPopulation& pop, const Scenario& s, double dt) {
    if (!(dt > 0)) throw DomainError("step: dt must be positive");
    const auto& P = s.params;
    const int n = s.size();
    const double h = s.grid.spacing();
    const size_t nf = pop.firm_x.size(), ni = pop.inv_x.size();
    const Landscape land = landscape_of(s);

    std::vector<int> fcell(nf), count(n, 0);
    for (size_t i = 0; i < nf; ++i) {
        fcell[i] = cell_of(s, pop.firm_x[i]);
        ++count[fcell[i]];
    }
    std::vector<int> target = nearest_occupied(s, count);
    std::vector<int> icell(ni);
    for (size_t j = 0; j < ni; ++j) icell[j] = target[cell_of(s, pop.inv_x[j])];

    // allocation: every investor spreads its wealth over the firms of its target cell with
    // weights F2 = R^zeta; a firm's capital is what it receives
    std::vector<double> f2(nf), f2_sum(n, 0.0), pool(n, 0.0);
    for (size_t i = 0; i < nf; ++i) {
        f2[i] = std::pow(land.r[fcell[i]], P.f2_exponent);
        f2_sum[fcell[i]] += f2[i];
    }
    double inv_total = 0.0;
    for (size_t j = 0; j < ni; ++j) {
        pool[icell[j]] += pop.inv_k[j];
        inv_total += pop.inv_k[j];
    }
    double firm_total = 0.0;
    for (size_t i = 0; i < nf; ++i) {
        pop.firm_k[i] = pool[fcell[i]] * (f2[i] / f2_sum[fcell[i]]);
        firm_total += pop.firm_k[i];
    }
    pop.firm_cell = fcell;
    pop.conservation_error = inv_total > 0 ? std::abs(firm_total - inv_total) / inv_total : firm_total;

    // firm returns: dividend, same-cell competition, price term
    std::vector<double> cell_k(n, 0.0);
    double avg_ka = 0.0, avg_r = 0.0;
    for (size_t i = 0; i < nf; ++i) {
        cell_k[fcell[i]] += pop.firm_k[i];
        avg_ka += std::pow(pop.firm_k[i], P.alpha);
        avg_r += land.r[fcell[i]];
    }
    avg_ka /= double(nf);
    avg_r /= double(nf);
    std::vector<double> ret(nf), cell_rate(n, 0.0), cell_ka(n, 0.0);
    for (size_t i = 0; i < nf; ++i) {
        int c = fcell[i];
        double k = pop.firm_k[i];
        double ka = std::pow(k, P.alpha);
        double prod = s.productivity(c);
        double dividend = k > 0 ? P.alpha * prod * ka / k : 0.0;
        double crowd = k > 0 ? cell_k[c] / k : double(count[c]);
        double u = avg_ka > 0 ? ka * land.r[c] / (avg_ka * avg_r) - 1.0 : -1.0;
        ret[i] = dividend - P.gamma * crowd / h + P.b * std::atan(u);
        cell_rate[c] += ret[i] * (f2[i] / f2_sum[c]);
        cell_ka[c] += ka / count[c];
    }

    // investor wealth; a step through zero is reflected
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double noise_k = std::sqrt(2 * P.sigma_khat2 * dt);
    for (size_t j = 0; j < ni; ++j) {
        double k = pop.inv_k[j];
        k += dt / P.epsilon * cell_rate[icell[j]] * k + noise_k * gauss(pop.rng);
        if (k < 0) {
            k = -k;
            ++pop.shortfall_events;
        }
        pop.inv_k[j] = k;
    }

    // motion: firms along R' K^eta, investors along R' times the mobility prefactor
    const double nf_noise = std::sqrt(P.sigma_x2 * dt);
    for (size_t i = 0; i < nf; ++i) {
        double drift = land.r1[fcell[i]] * std::pow(pop.firm_k[i], P.eta);
        pop.firm_x[i] = place(s, pop.firm_x[i] + drift * dt + nf_noise * gauss(pop.rng));
    }
    const double mob = avg_ka > 0 ? (P.a_f0 + P.nu * P.b / avg_r) / avg_ka : 0.0;
    const double ni_noise = std::sqrt(P.sigma_xhat2 * dt);
    for (size_t j = 0; j < ni; ++j) {
        double drift = land.r1[cell_of(s, pop.inv_x[j])] * mob * cell_ka[icell[j]];
        pop.inv_x[j] = place(s, pop.inv_x[j] + drift * dt + ni_noise * gauss(pop.rng));
    }
    ++pop.step_count;
}

double AbmComparison::max_abs_rel_dev_k() const {
    double m = 0;
    for (double v : rel_dev_k)
        if (std::isfinite(v)) m = std::max(m, std::abs(v));
    return m;
}

double AbmComparison::max_abs_rel_dev_count() const {
    double m = 0;
    for (double v : rel_dev_count)
        if (std::isfinite(v)) m = std::max(m, std::abs(v));
    return m;
}

namespace {

struct SeedResult {
    std::vector<double> mean_k, mean_count;
    double max_cons = 0;
    long shortfall = 0;
};

SeedResult run_seed(const Scenario& s, const FieldSolution& sol, std::uint64_t seed, long steps, long burn_in,
                    double dt) {
    const int n = s.size();
    AgentPopulation pop = init_population(s, seed, &sol);
    std::vector<double> sum_k(n, 0.0), sum_count(n, 0.0);
    SeedResult r;
    long samples = 0;
    for (long t = 0; t < steps; ++t) {
        step(pop, s, dt);
        r.max_cons = std::max(r.max_cons, pop.conservation_error);
        if (t < burn_in) continue;
        ++samples;
        for (size_t i = 0; i < pop.firm_x.size(); ++i) {
            int c = pop.firm_cell[i];
            sum_k[c] += pop.firm_k[i];
            sum_count[c] += 1.0;
        }
    }
    r.mean_k.assign(n, std::nan(""));
    r.mean_count.assign(n, 0.0);
    for (int c = 0; c < n; ++c) {
        if (sum_count[c] > 0) r.mean_k[c] = sum_k[c] / sum_count[c];
        r.mean_count[c] = samples > 0 ? sum_count[c] / double(samples) : 0.0;
    }
    r.shortfall = pop.shortfall_events;
    return r;
}

void mean_se(const std::vector<double>& v, double& mean, double& se) {
    double s = 0;
    int n = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            s += x;
            ++n;
        }
    if (n == 0) {
        mean = se = std::nan("");
        return;
    }
    mean = s / n;
    double ss = 0;
    for (double x : v)
        if (std::isfinite(x)) ss += (x - mean) * (x - mean);
    se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
}

}  // namespace

AbmComparison run_and_compare(const Scenario& s, const FieldSolution& sol, long steps, long burn_in, int seeds,
                              const AbmOptions& opt) {
    if (steps <= burn_in) throw DomainError("run_and_compare: steps must exceed burn_in");
    if (seeds < 1) throw DomainError("run_and_compare: need at least one seed");
    std::vector<SeedResult> results(seeds);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k; (k = next.fetch_add(1)) < seeds;)
            results[k] = run_seed(s, sol, std::uint64_t(k), steps, burn_in, opt.dt);
    };
    int nt = std::clamp(opt.threads, 1, seeds);
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    const int n = s.size();
    const double h = s.grid.spacing();
    AbmComparison c;
    c.seeds = seeds;
    c.steps = steps;
    c.burn_in = burn_in;
    c.mean_k.resize(n);
    c.se_k.resize(n);
    c.mean_count.resize(n);
    c.se_count.resize(n);
    c.field_k.resize(n);
    c.field_count.resize(n);
    c.rel_dev_k.resize(n);
    c.rel_dev_count.resize(n);
    for (const auto& r : results) {
        c.max_conservation_error = std::max(c.max_conservation_error, r.max_cons);
        c.shortfall_events += r.shortfall;
    }
    std::vector<double> col(seeds);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < seeds; ++k) col[k] = results[k].mean_k[i];
        mean_se(col, c.mean_k[i], c.se_k[i]);
        for (int k = 0; k < seeds; ++k) col[k] = results[k].mean_count[i];
        mean_se(col, c.mean_count[i], c.se_count[i]);
        c.field_k[i] = sol.k_x[i];
        c.field_count[i] = sol.psi2[i] * h;
        c.rel_dev_k[i] = c.field_k[i] > 0 ? c.mean_k[i] / c.field_k[i] - 1 : std::nan("");
        c.rel_dev_count[i] = c.field_count[i] > 0 ? c.mean_count[i] / c.field_count[i] - 1 : std::nan("");
    }
    return c;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string comparison_csv(const Scenario& s, const AbmComparison& c) {
    std::string out = "x,abm_k,se_k,field_k,rel_dev_k,abm_count,se_count,field_count,rel_dev_count\n";
    for (int i = 0; i < s.size(); ++i) {
        out += num(s.grid.center(i)) + "," + num(c.mean_k[i]) + "," + num(c.se_k[i]) + "," + num(c.field_k[i]) +
               "," + num(c.rel_dev_k[i]) + "," + num(c.mean_count[i]) + "," + num(c.se_count[i]) + "," +
               num(c.field_count[i]) + "," + num(c.rel_dev_count[i]) + "\n";
    }
    return out;
}

std::string trajectory_csv(const Scenario& s, const FieldSolution* sol, std::uint64_t seed, long steps, long every,
                           double dt) {
    if (every < 1) throw DomainError("trajectory_csv: sampling interval must be positive");
    const int n = s.size();
    AgentPopulation pop = init_population(s, seed, sol);
    std::string out = "t,x,firm_count,mean_k\n";
    for (long t = 1; t <= steps; ++t) {
        step(pop, s, dt);
        if (t % every) continue;
        std::vector<double> sum(n, 0.0);
        std::vector<int> cnt(n, 0);
        for (size_t i = 0; i < pop.firm_x.size(); ++i) {
            int c = pop.firm_cell[i];
            sum[c] += pop.firm_k[i];
            ++cnt[c];
        }
        for (int c = 0; c < n; ++c)
            out += num(t * dt) + "," + num(s.grid.center(c)) + "," + std::to_string(cnt[c]) + "," +
                   num(cnt[c] ? sum[c] / cnt[c] : 0.0) + "\n";
    }
    return out;
}

}  // namespace sfe
