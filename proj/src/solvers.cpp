#include "fireflow/solvers.hpp"

namespace fireflow {

const char* solver_name(SolverKind kind) {
    switch (kind) {
        case SolverKind::Euler: return "euler";
        case SolverKind::Midpoint: return "midpoint";
        case SolverKind::Heun: return "heun";
        case SolverKind::FireFlow: return "fireflow";
    }
    return "?";
}

SolverKind solver_from_name(const std::string& name) {
    if (name == "euler") return SolverKind::Euler;
    if (name == "midpoint") return SolverKind::Midpoint;
    if (name == "heun") return SolverKind::Heun;
    if (name == "fireflow") return SolverKind::FireFlow;
    throw std::invalid_argument("unknown solver: " + name +
                                " (expected euler|midpoint|heun|fireflow)");
}

StateVec step_euler(const VelocityField& field, const StateVec& x, double t, double dt,
                    long long& nfe) {
    StateVec v = field.evaluate(x, t);
    ++nfe;
    return axpy(dt, v, x);
}

MidpointStep step_midpoint(const VelocityField& field, const StateVec& x, double t, double dt,
                           long long& nfe) {
    StateVec v0 = field.evaluate(x, t);
    ++nfe;
    StateVec x_mid = axpy(0.5 * dt, v0, x);
    StateVec v_mid = field.evaluate(x_mid, t + 0.5 * dt);
    ++nfe;
    return {axpy(dt, v_mid, x), std::move(v_mid)};
}

StateVec step_heun(const VelocityField& field, const StateVec& x, double t, double dt,
                   long long& nfe) {
    StateVec v0 = field.evaluate(x, t);
    ++nfe;
    StateVec x_pred = axpy(dt, v0, x);
    StateVec v1 = field.evaluate(x_pred, t + dt);
    ++nfe;
    StateVec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + 0.5 * dt * (v0[i] + v1[i]);
    return out;
}

void step_fireflow(const VelocityField& field, SolverState& state, double t, double dt) {
    if (!state.cached_mid_velocity) {
        // Initialization: a full midpoint step so the run starts with
        // second-order local error; two evaluations, cache the midpoint drift.
        MidpointStep s = step_midpoint(field, state.x, t, dt, state.nfe);
        state.x = std::move(s.x);
        state.cached_mid_velocity = std::move(s.mid_velocity);
        return;
    }
    // v_hat comes from memory (previous interval's midpoint velocity), so the
    // half step is free; only the midpoint evaluation costs an NFE.
    const StateVec& v_hat = *state.cached_mid_velocity;
    StateVec x_mid = axpy(0.5 * dt, v_hat, state.x);
    StateVec v_mid = field.evaluate(x_mid, t + 0.5 * dt);
    ++state.nfe;
    state.x = axpy(dt, v_mid, state.x);
    state.cached_mid_velocity = std::move(v_mid);
}

namespace {

Trajectory run_grid(const VelocityField& field, const StateVec& x0, const TimeGrid& grid,
                    SolverKind kind, const EditHook& edit_hook) {
    ensure_finite(x0, "integrate: x0");
    ensure_dim(x0, field.dim(), "integrate: x0");

    const int n = grid.steps();
    Trajectory traj;
    traj.kind = kind;
    traj.times = grid.points();
    traj.states.reserve(n + 1);
    traj.nfe_cum.reserve(n + 1);
    traj.states.push_back(x0);
    traj.nfe_cum.push_back(0);
    if (kind == SolverKind::Midpoint || kind == SolverKind::FireFlow) {
        traj.mid_velocities.reserve(n);
    }

    SolverState state;
    state.x = x0;

    for (int i = 0; i < n; ++i) {
        const double t = grid.point(i);
        const double dt = grid.dt(i);
        if (edit_hook) edit_hook(i, t, state.x);
        switch (kind) {
            case SolverKind::Euler:
                state.x = step_euler(field, state.x, t, dt, state.nfe);
                break;
            case SolverKind::Midpoint: {
                MidpointStep s = step_midpoint(field, state.x, t, dt, state.nfe);
                state.x = std::move(s.x);
                traj.mid_velocities.push_back(std::move(s.mid_velocity));
                break;
            }
            case SolverKind::Heun:
                state.x = step_heun(field, state.x, t, dt, state.nfe);
                break;
            case SolverKind::FireFlow:
                step_fireflow(field, state, t, dt);
                traj.mid_velocities.push_back(*state.cached_mid_velocity);
                break;
        }
        if (!all_finite(state.x)) {
            traj.nfe_total = state.nfe;
            throw DivergenceError(i, std::move(traj));
        }
        traj.states.push_back(state.x);
        traj.nfe_cum.push_back(state.nfe);
    }
    traj.nfe_total = state.nfe;
    return traj;
}

}  // namespace

Trajectory integrate(const VelocityField& field, const StateVec& x0, const TimeGrid& grid,
                     SolverKind kind) {
    return run_grid(field, x0, grid, kind, nullptr);
}

Trajectory invert(const VelocityField& field, const StateVec& x_data, const TimeGrid& grid) {
    return run_grid(field, x_data, grid, SolverKind::FireFlow, nullptr);
}

Trajectory reconstruct(const VelocityField& field, const StateVec& x_noise, const TimeGrid& grid,
                       const EditHook& edit_hook) {
    return run_grid(field, x_noise, grid, SolverKind::FireFlow, edit_hook);
}

}  // namespace fireflow
