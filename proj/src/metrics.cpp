#include "fireflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fireflow/parallel.hpp"

namespace fireflow {

namespace {
constexpr double kNoiseFloor = 1e-13;
}

OrderEstimate estimate_order(const ErrorSeries& series) {
    if (series.dt.size() != series.error.size()) {
        throw std::invalid_argument("estimate_order: ragged series");
    }
    for (std::size_t i = 1; i < series.dt.size(); ++i) {
        if (!(series.dt[i] < series.dt[i - 1])) {
            throw std::invalid_argument("estimate_order: dt must be strictly decreasing");
        }
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < series.dt.size(); ++i) {
        if (!std::isfinite(series.error[i]) || series.error[i] < 0.0) {
            throw std::invalid_argument("estimate_order: errors must be finite and >= 0");
        }
        if (series.error[i] > kNoiseFloor) {
            lx.push_back(std::log(series.dt[i]));
            ly.push_back(std::log(series.error[i]));
        }
    }

    OrderEstimate est;
    est.points_used = static_cast<int>(lx.size());
    if (lx.size() < 4) {
        est.degenerate = true;
        return est;
    }

    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double dx = lx[i] - mx, dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    est.slope = sxy / sxx;
    est.intercept = my - est.slope * mx;
    est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return est;
}

std::vector<VelocityReuseSample> velocity_reuse_error(const VelocityField& field,
                                                      const StateVec& x0, const TimeGrid& grid) {
    SolverState state;
    state.x = x0;
    std::vector<VelocityReuseSample> out;
    out.reserve(std::max(0, grid.steps() - 1));
    for (int i = 0; i < grid.steps(); ++i) {
        const double t = grid.point(i);
        const double dt = grid.dt(i);
        if (state.cached_mid_velocity) {
            // What the cached velocity stands in for is v(x_i, t_i); measure
            // the substitution gap with an uncounted fresh evaluation.
            StateVec fresh = field.evaluate(state.x, t);
            VelocityReuseSample s;
            s.step = i;
            s.t = t;
            s.dt = dt;
            s.error = l2_distance(*state.cached_mid_velocity, fresh);
            out.push_back(s);
        }
        step_fireflow(field, state, t, dt);
        if (!all_finite(state.x)) {
            throw std::runtime_error("velocity_reuse_error: diverged at step " + std::to_string(i));
        }
    }
    return out;
}

PerturbationReport perturbation_propagation(const AnalyticField& field, const StateVec& x_T,
                                            const StateVec& delta_T, double horizon,
                                            int ref_steps) {
    if (!(horizon > 0.0 && horizon <= 1.0)) {
        throw std::invalid_argument("perturbation_propagation: horizon must be in (0,1]");
    }
    ensure_dim(delta_T, field.dim(), "perturbation_propagation: delta");
    const TimeGrid grid = TimeGrid::uniform(horizon, 0.0, ref_steps);

    StateVec perturbed = x_T;
    for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] += delta_T[i];

    const Trajectory base = integrate(field, x_T, grid, SolverKind::Midpoint);
    const Trajectory shifted = integrate(field, perturbed, grid, SolverKind::Midpoint);

    PerturbationReport rep;
    rep.delta_T = l2_norm(delta_T);
    rep.delta_0 = l2_distance(base.endpoint(), shifted.endpoint());
    rep.lipschitz = field.lipschitz();
    rep.horizon = horizon;
    rep.bound = std::exp(-rep.lipschitz * horizon) * rep.delta_T;
    // The contractive regime sits exactly on the bound, so the flag must
    // absorb the reference grid's own O(dt^2) error (~1e-6 at 512 steps);
    // genuine violations overshoot by factors of e^{2LT}.
    rep.satisfied = rep.delta_0 <= rep.bound * (1.0 + 1e-5) + 1e-15;
    return rep;
}

namespace {

ReconstructionStats round_trip_impl(const VelocityField& field,
                                    const std::vector<StateVec>& samples, int n_steps,
                                    SolverKind kind, bool parallel) {
    if (samples.empty()) throw std::invalid_argument("round_trip_error: no samples");
    if (n_steps < 1) throw std::invalid_argument("round_trip_error: n_steps must be >= 1");

    // Data lives at t=1 in this artifact; inversion runs 1 -> 0 and the
    // reconstruction retraces the mirror grid using only the endpoint.
    const TimeGrid grid_inv = TimeGrid::uniform(1.0, 0.0, n_steps);
    const TimeGrid grid_rec = grid_inv.reversed();

    const int n = static_cast<int>(samples.size());
    std::vector<double> err(n, -1.0);  // negative marks divergence
    std::vector<long long> nfe(n, 0);

    auto body = [&](int i) {
        try {
            Trajectory down, up;
            if (kind == SolverKind::FireFlow) {
                down = invert(field, samples[i], grid_inv);
                up = reconstruct(field, down.endpoint(), grid_rec);
            } else {
                down = integrate(field, samples[i], grid_inv, kind);
                up = integrate(field, down.endpoint(), grid_rec, kind);
            }
            err[i] = l2_distance(up.endpoint(), samples[i]);
            nfe[i] = down.nfe_total + up.nfe_total;
        } catch (const DivergenceError&) {
            err[i] = -1.0;
        }
    };
    if (parallel) {
        parallel_for(n, body);
    } else {
        serial_for(n, body);
    }

    ReconstructionStats stats;
    for (int i = 0; i < n; ++i) {
        if (err[i] < 0.0) {
            ++stats.diverged;
        } else {
            stats.per_sample.push_back(err[i]);
            stats.nfe_per_sample = nfe[i];
        }
    }
    stats.samples = static_cast<int>(stats.per_sample.size());
    if (stats.samples > 0) {
        double acc = 0.0;
        for (double e : stats.per_sample) acc += e;
        stats.mean_err = acc / stats.samples;
        std::vector<double> sorted = stats.per_sample;
        std::sort(sorted.begin(), sorted.end());
        stats.p50_err = sorted[static_cast<std::size_t>(0.50 * (sorted.size() - 1))];
        stats.p95_err = sorted[static_cast<std::size_t>(0.95 * (sorted.size() - 1))];
    }
    return stats;
}

}  // namespace

ReconstructionStats reconstruction_error(const VelocityField& field,
                                         const std::vector<StateVec>& samples, int n_steps) {
    return round_trip_impl(field, samples, n_steps, SolverKind::FireFlow, true);
}

ReconstructionStats round_trip_error(const VelocityField& field,
                                     const std::vector<StateVec>& samples, int n_steps,
                                     SolverKind kind) {
    return round_trip_impl(field, samples, n_steps, kind, true);
}

ReconstructionStats round_trip_error_serial(const VelocityField& field,
                                            const std::vector<StateVec>& samples, int n_steps,
                                            SolverKind kind) {
    return round_trip_impl(field, samples, n_steps, kind, false);
}

std::optional<double> straightness(const Trajectory& traj) {
    if (traj.states.size() < 3) {
        throw std::invalid_argument("straightness: need at least 3 states");
    }
    const StateVec& s = traj.states.front();
    const StateVec& e = traj.states.back();
    const double chord = l2_distance(s, e);
    if (chord == 0.0) return std::nullopt;

    const std::size_t d = s.size();
    StateVec u(d);
    for (std::size_t k = 0; k < d; ++k) u[k] = (e[k] - s[k]) / chord;

    double max_dev = 0.0;
    for (std::size_t i = 1; i + 1 < traj.states.size(); ++i) {
        const StateVec& p = traj.states[i];
        double along = 0.0;
        for (std::size_t k = 0; k < d; ++k) along += (p[k] - s[k]) * u[k];
        double dev2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double r = (p[k] - s[k]) - along * u[k];
            dev2 += r * r;
        }
        max_dev = std::max(max_dev, std::sqrt(dev2));
    }
    return max_dev / chord;
}

namespace {

double pair_sum_rows(const std::vector<StateVec>& a, const std::vector<StateVec>& b,
                     bool parallel) {
    const int n = static_cast<int>(a.size());
    std::vector<double> row(n, 0.0);
    auto body = [&](int i) {
        double acc = 0.0;
        for (const StateVec& q : b) acc += l2_distance(a[i], q);
        row[i] = acc;
    };
    if (parallel) {
        parallel_for(n, body);
    } else {
        serial_for(n, body);
    }
    double total = 0.0;
    for (double r : row) total += r;
    return total;
}

double energy_distance_impl(const std::vector<StateVec>& a, const std::vector<StateVec>& b,
                            bool parallel) {
    if (a.empty() || b.empty()) throw std::invalid_argument("energy_distance: empty sample set");
    if (a[0].size() != b[0].size()) throw std::invalid_argument("energy_distance: dim mismatch");
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    const double ab = pair_sum_rows(a, b, parallel) / (n * m);
    const double aa = pair_sum_rows(a, a, parallel) / (n * n);
    const double bb = pair_sum_rows(b, b, parallel) / (m * m);
    return 2.0 * ab - aa - bb;
}

}  // namespace

double energy_distance(const std::vector<StateVec>& a, const std::vector<StateVec>& b) {
    return energy_distance_impl(a, b, true);
}

double energy_distance_serial(const std::vector<StateVec>& a, const std::vector<StateVec>& b) {
    return energy_distance_impl(a, b, false);
}

}  // namespace fireflow
