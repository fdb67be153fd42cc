#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fireflow/field.hpp"
#include "fireflow/grid.hpp"
#include "fireflow/solvers.hpp"
#include "fireflow/state.hpp"

namespace fireflow {

/// Global endpoint errors over a step-size ladder for one solver/field pair.
struct ErrorSeries {
    SolverKind solver = SolverKind::Euler;
    std::string field_id;
    std::vector<double> dt;     // strictly decreasing
    std::vector<double> error;  // >= 0, aligned with dt
};

/// Least-squares fit of log(error) against log(dt). Points at or below
/// the machine-noise floor (1e-13) are dropped before the regression; if
/// fewer than 4 points survive the estimate is flagged degenerate.
struct OrderEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool degenerate = false;
    int points_used = 0;
};

OrderEstimate estimate_order(const ErrorSeries& series);

/// Per-step gap between the reused midpoint velocity v_hat and a fresh
/// evaluation of the drift at the same (x, t). The fresh evaluations are
/// instrumentation only and excluded from NFE accounting.
struct VelocityReuseSample {
    int step = 0;      // steps >= 1; step 0 has no cache yet
    double t = 0.0;
    double dt = 0.0;
    double error = 0.0;
};

std::vector<VelocityReuseSample> velocity_reuse_error(const VelocityField& field,
                                                      const StateVec& x0, const TimeGrid& grid);

/// Backward perturbation propagation against the bound e^{-L T}*||Delta_T||.
/// Both endpoints are integrated on a fine midpoint reference grid from t=T
/// down to 0. The bound provably holds for contractive reverse dynamics and
/// is violated by expansive ones; the report states what was measured either
/// way.
struct PerturbationReport {
    double delta_T = 0.0;
    double delta_0 = 0.0;
    double lipschitz = 0.0;
    double horizon = 0.0;
    double bound = 0.0;  // e^{-L T} * ||Delta_T||
    bool satisfied = false;
};

PerturbationReport perturbation_propagation(const AnalyticField& field, const StateVec& x_T,
                                            const StateVec& delta_T, double horizon = 1.0,
                                            int ref_steps = 512);

/// Invert every sample from the data end with N steps, integrate back with
/// the mirror grid, and collect ||x_rec - x_data||_2. Per-sample divergences
/// are recorded and excluded from the statistics; the run continues.
struct ReconstructionStats {
    double mean_err = 0.0;
    double p50_err = 0.0;
    double p95_err = 0.0;
    long long nfe_per_sample = 0;  // 2N+2 for the cached-midpoint solver
    int samples = 0;
    int diverged = 0;
    std::vector<double> per_sample;
};

/// Round trip with the cached-midpoint solver (the headline protocol).
ReconstructionStats reconstruction_error(const VelocityField& field,
                                         const std::vector<StateVec>& samples, int n_steps);

/// Same protocol under any solver, for NFE-parity comparisons.
ReconstructionStats round_trip_error(const VelocityField& field,
                                     const std::vector<StateVec>& samples, int n_steps,
                                     SolverKind kind);
ReconstructionStats round_trip_error_serial(const VelocityField& field,
                                            const std::vector<StateVec>& samples, int n_steps,
                                            SolverKind kind);

/// Maximum distance of the interior states to the endpoint chord, divided by
/// the chord length. Zero chord leaves the value undefined (nullopt).
std::optional<double> straightness(const Trajectory& traj);

/// Energy distance 2E||A-B|| - E||A-A'|| - E||B-B'|| via the all-pairs
/// V-statistic, so identical sample sets give exactly zero. Row sums are
/// computed per element of the first index and reduced in index order;
/// the parallel and serial variants agree bitwise.
double energy_distance(const std::vector<StateVec>& a, const std::vector<StateVec>& b);
double energy_distance_serial(const std::vector<StateVec>& a, const std::vector<StateVec>& b);

}  // namespace fireflow
