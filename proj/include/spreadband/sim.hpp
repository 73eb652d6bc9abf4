#pragma once

#include "spreadband/model.hpp"
#include "spreadband/solver.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace spreadband {

/// Time discretization and sampling budget of a Monte-Carlo run.
struct PathConfig {
    double horizon = 50.0;
    double dt = 1e-3;
    int n_paths = 10000;
    std::uint64_t seed = 1;

    void validate() const;
};

struct McEstimate {
    double mean;
    double std_error;
};

struct StrategyOutcome {
    double mean_gain = 0.0;
    double std_error = 0.0;
    double n_switches_mean = 0.0;
    std::array<double, 3> regime_occupancy{};  ///< time fractions in {-1, 0, +1}
    double discount_tail = 0.0;                ///< e^(-rho * horizon), the truncation factor
};

/// One path on the uniform time grid, X_0 = x0, values at t = 0, dt, ..., horizon.
/// OU uses the exact transition; IGBM uses full-truncation Euler (positive paths).
/// Paths are keyed by (seed, path_index): reproducible and order-insensitive.
void simulate_path_into(std::vector<double>& out, const ModelParams& params, double x0,
                        const PathConfig& cfg, std::uint64_t path_index);
std::vector<double> simulate_path(const ModelParams& params, double x0, const PathConfig& cfg,
                                  std::uint64_t path_index = 0);

/// Discounted realized gain of the band policy along one path: in the flat
/// regime open at the band edges, close at the inner edges; opposite-side
/// switches always pass through flat (one action per grid time). The
/// inventory penalty integral uses trapezoidal weights on e^(-rho t).
double run_strategy(std::span<const double> path, double dt, const CutoffSet& cutoffs,
                    int start_regime, const GainFunctions& gains, const ModelParams& params);

/// Monte-Carlo estimate of the gain functional for the band policy.
StrategyOutcome estimate_gain(const ModelParams& params, double x0, int start_regime,
                              const CutoffSet& cutoffs, const PathConfig& cfg);

/// Discretization-bias control: one path stream generated at dt/2, monitored
/// both every fine step and every other step (for OU the subsampled chain is
/// an exact dt transition, so the two estimates share their randomness and
/// their difference isolates the monitoring bias).
struct BiasCheck {
    StrategyOutcome coarse;  ///< monitored at cfg.dt
    StrategyOutcome fine;    ///< monitored at cfg.dt / 2
    McEstimate diff;         ///< paired fine - coarse gain
};

BiasCheck estimate_gain_bias_check(const ModelParams& params, double x0, int start_regime,
                                   const CutoffSet& cutoffs, const PathConfig& cfg);

/// Monte-Carlo estimate of E[e^(-rho tau_y)] for the IGBM first passage from
/// x0 <= y; paths that do not reach y within the horizon contribute 0.
McEstimate estimate_hitting_laplace(const ModelParams& params, double x0, double y,
                                    const PathConfig& cfg);

}  // namespace spreadband
