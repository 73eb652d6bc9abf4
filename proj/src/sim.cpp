#include "spreadband/sim.hpp"

#include "spreadband/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace spreadband {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t x = (state += 0x9e3779b97f4a7c15ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// xoshiro256++, state keyed by (seed, path index): reproducible and
/// order-insensitive across threads.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path_index) {
        std::uint64_t sm = seed * 0x9e3779b97f4a7c15ULL + path_index;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Marsaglia polar method, one cached mate per pair
    double normal() {
        if (have_) {
            have_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        have_ = true;
        return u * f;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    bool have_ = false;
    double cached_ = 0.0;
};

/// Per-step state transition, exact for OU, full-truncation Euler for IGBM.
struct Stepper {
    explicit Stepper(const ModelParams& p, double dt) : params(p) {
        if (p.kind == ModelKind::OU) {
            decay = std::exp(-p.mu * dt);
            noise = p.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * p.mu));
        } else {
            drift_dt = p.mu * dt;
            sq_dt = std::sqrt(dt);
        }
    }

    double step(double x, double z) const {
        if (params.kind == ModelKind::OU) {
            return params.L + (x - params.L) * decay + noise * z;
        }
        const double xp = std::max(x, 0.0);
        const double next = x + drift_dt * (params.L - xp) + params.sigma * xp * sq_dt * z;
        return std::max(next, 1e-12 * params.L);
    }

    const ModelParams& params;
    double decay = 0.0, noise = 0.0, drift_dt = 0.0, sq_dt = 0.0;
};

/// Band-policy execution with streaming accumulation.
struct StrategyRunner {
    StrategyRunner(const CutoffSet& c, int start_regime, const GainFunctions& g,
                   const ModelParams& p, double dt_)
        : cut(c), gains(g), dt(dt_), lam(p.lambda), disc_step(std::exp(-p.rho * dt_)),
          regime(start_regime) {}

    void decide(double x) {
        if (regime == 0) {
            if (cut.open_buy && x <= *cut.open_buy) {
                trade(gains.buy(x), +1);
            } else if (x >= cut.open_sell) {
                trade(gains.sell(x), -1);
            }
        } else if (regime == 1) {
            if (cut.sell_to_close_everywhere || x >= cut.close_sell) trade(gains.sell(x), 0);
        } else {
            if (cut.close_buy && x <= *cut.close_buy) trade(gains.buy(x), 0);
        }
    }

    // decide at the grid time, then accrue over [t, t+dt)
    void observe(double x) {
        decide(x);
        occupancy[regime + 1] += dt;
        if (regime != 0) penalty += lam * dt * 0.5 * disc * (1.0 + disc_step);
        disc *= disc_step;
    }

    double gain() const { return switch_gain - penalty; }

    void trade(double amount, int to) {
        switch_gain += disc * amount;
        regime = to;
        ++switches;
    }

    const CutoffSet& cut;
    const GainFunctions& gains;
    double dt, lam, disc_step;
    int regime;
    double disc = 1.0;
    double switch_gain = 0.0;
    double penalty = 0.0;
    int switches = 0;
    std::array<double, 3> occupancy{};
};

}  // namespace

void PathConfig::validate() const {
    if (!(horizon > 0) || !(dt > 0)) throw ValidationError("horizon and dt must be > 0");
    if (dt > horizon / 100.0) throw ValidationError("dt must be <= horizon/100");
    if (n_paths < 1) throw ValidationError("n_paths must be >= 1");
}

void simulate_path_into(std::vector<double>& out, const ModelParams& params, double x0,
                        const PathConfig& cfg, std::uint64_t path_index) {
    params.validate();
    cfg.validate();
    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
    out.clear();
    out.reserve(n_steps + 1);
    PathRng rng(cfg.seed, path_index);
    const Stepper stepper(params, cfg.dt);
    double x = x0;
    out.push_back(x);
    for (std::size_t i = 0; i < n_steps; ++i) {
        x = stepper.step(x, rng.normal());
        out.push_back(x);
    }
}

std::vector<double> simulate_path(const ModelParams& params, double x0, const PathConfig& cfg,
                                  std::uint64_t path_index) {
    std::vector<double> out;
    simulate_path_into(out, params, x0, cfg, path_index);
    return out;
}

double run_strategy(std::span<const double> path, double dt, const CutoffSet& cutoffs,
                    int start_regime, const GainFunctions& gains, const ModelParams& params) {
    if (path.empty()) throw ValidationError("run_strategy: empty path");
    StrategyRunner runner(cutoffs, start_regime, gains, params, dt);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) runner.observe(path[i]);
    runner.decide(path.back());  // a final switch at the horizon carries no accrual
    return runner.gain();
}

namespace {

template <typename PerPath>
void parallel_paths(int n_paths, const PerPath& body) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = std::min<unsigned>(hw, 8);
    if (n_threads <= 1 || n_paths < 64) {
        for (int i = 0; i < n_paths; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    std::atomic<int> next{0};
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            constexpr int kChunk = 64;
            while (true) {
                const int lo = next.fetch_add(kChunk);
                if (lo >= n_paths) break;
                const int hi = std::min(n_paths, lo + kChunk);
                for (int i = lo; i < hi; ++i) body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

McEstimate mean_and_se(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= std::max(1.0, n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

StrategyOutcome estimate_gain(const ModelParams& params, double x0, int start_regime,
                              const CutoffSet& cutoffs, const PathConfig& cfg) {
    params.validate();
    cfg.validate();
    if (start_regime < -1 || start_regime > 1) {
        throw ValidationError("start_regime must be -1, 0 or 1");
    }
    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
    const GainFunctions gains{params.epsilon};

    std::vector<double> gains_by_path(cfg.n_paths);
    std::vector<double> switches_by_path(cfg.n_paths);
    std::vector<std::array<double, 3>> occ_by_path(cfg.n_paths);

    parallel_paths(cfg.n_paths, [&](int ipath) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(ipath));
        const Stepper stepper(params, cfg.dt);
        StrategyRunner runner(cutoffs, start_regime, gains, params, cfg.dt);
        double x = x0;
        for (std::size_t i = 0; i < n_steps; ++i) {
            runner.observe(x);
            x = stepper.step(x, rng.normal());
        }
        runner.decide(x);
        gains_by_path[ipath] = runner.gain();
        switches_by_path[ipath] = runner.switches;
        occ_by_path[ipath] = runner.occupancy;
    });

    StrategyOutcome out;
    const auto est = mean_and_se(gains_by_path);  // deterministic reduction: path order
    out.mean_gain = est.mean;
    out.std_error = est.std_error;
    out.n_switches_mean = mean_and_se(switches_by_path).mean;
    const double total_time = static_cast<double>(n_steps) * cfg.dt * cfg.n_paths;
    for (int r = 0; r < 3; ++r) {
        double acc = 0.0;
        for (const auto& occ : occ_by_path) acc += occ[r];
        out.regime_occupancy[r] = acc / total_time;
    }
    out.discount_tail = std::exp(-params.rho * cfg.horizon);
    return out;
}

BiasCheck estimate_gain_bias_check(const ModelParams& params, double x0, int start_regime,
                                   const CutoffSet& cutoffs, const PathConfig& cfg) {
    params.validate();
    cfg.validate();
    const auto n_coarse = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
    const double dt_fine = cfg.dt / 2;
    const GainFunctions gains{params.epsilon};

    std::vector<double> g_coarse(cfg.n_paths), g_fine(cfg.n_paths), sw_c(cfg.n_paths),
        sw_f(cfg.n_paths);
    std::vector<std::array<double, 3>> occ_c(cfg.n_paths), occ_f(cfg.n_paths);

    parallel_paths(cfg.n_paths, [&](int ipath) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(ipath));
        const Stepper stepper(params, dt_fine);
        StrategyRunner coarse(cutoffs, start_regime, gains, params, cfg.dt);
        StrategyRunner fine(cutoffs, start_regime, gains, params, dt_fine);
        double x = x0;
        for (std::size_t i = 0; i < n_coarse; ++i) {
            coarse.observe(x);
            fine.observe(x);
            x = stepper.step(x, rng.normal());
            fine.observe(x);
            x = stepper.step(x, rng.normal());
        }
        coarse.decide(x);
        fine.decide(x);
        g_coarse[ipath] = coarse.gain();
        g_fine[ipath] = fine.gain();
        sw_c[ipath] = coarse.switches;
        sw_f[ipath] = fine.switches;
        occ_c[ipath] = coarse.occupancy;
        occ_f[ipath] = fine.occupancy;
    });

    const auto fill = [&](StrategyOutcome& out, const std::vector<double>& g,
                          const std::vector<double>& sw,
                          const std::vector<std::array<double, 3>>& occ) {
        const auto est = mean_and_se(g);
        out.mean_gain = est.mean;
        out.std_error = est.std_error;
        out.n_switches_mean = mean_and_se(sw).mean;
        const double total = static_cast<double>(n_coarse) * cfg.dt * cfg.n_paths;
        for (int r = 0; r < 3; ++r) {
            double acc = 0.0;
            for (const auto& o : occ) acc += o[r];
            out.regime_occupancy[r] = acc / total;
        }
        out.discount_tail = std::exp(-params.rho * cfg.horizon);
    };

    BiasCheck bc;
    fill(bc.coarse, g_coarse, sw_c, occ_c);
    fill(bc.fine, g_fine, sw_f, occ_f);
    std::vector<double> diff(cfg.n_paths);
    for (int i = 0; i < cfg.n_paths; ++i) diff[i] = g_fine[i] - g_coarse[i];
    bc.diff = mean_and_se(diff);
    return bc;
}

McEstimate estimate_hitting_laplace(const ModelParams& params, double x0, double y,
                                    const PathConfig& cfg) {
    params.validate();
    cfg.validate();
    if (params.kind != ModelKind::IGBM) {
        throw ValidationError("estimate_hitting_laplace: model kind must be IGBM");
    }
    if (!(x0 > 0) || x0 > y) throw DomainError("estimate_hitting_laplace: requires 0 < x0 <= y");
    if (x0 == y) return {1.0, 0.0};

    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
    const double disc_step = std::exp(-params.rho * cfg.dt);
    std::vector<double> vals(cfg.n_paths);

    parallel_paths(cfg.n_paths, [&](int ipath) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(ipath));
        const Stepper stepper(params, cfg.dt);
        double x = x0;
        double disc = 1.0;
        double v = 0.0;
        for (std::size_t i = 0; i < n_steps; ++i) {
            x = stepper.step(x, rng.normal());
            disc *= disc_step;
            if (x >= y) {
                v = disc;
                break;
            }
        }
        vals[ipath] = v;
    });
    return mean_and_se(vals);
}

}  // namespace spreadband
