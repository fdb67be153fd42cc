#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fireflow/field.hpp"
#include "fireflow/grid.hpp"
#include "fireflow/state.hpp"

namespace fireflow {

enum class SolverKind { Euler, Midpoint, Heun, FireFlow };

const char* solver_name(SolverKind kind);
SolverKind solver_from_name(const std::string& name);

/// Mutable state threaded through fireflow steps. The cached midpoint
/// velocity is absent before the first step and present after every step;
/// nfe only ever increases.
struct SolverState {
    StateVec x;
    std::optional<StateVec> cached_mid_velocity;
    long long nfe = 0;
};

/// States aligned with the grid points, plus the per-step midpoint
/// velocities for midpoint-family solvers and the cumulative NFE record.
///
/// NFE totals for N steps: Euler N, Midpoint 2N, Heun 2N, FireFlow N+1.
struct Trajectory {
    SolverKind kind = SolverKind::Euler;
    std::vector<double> times;             // N+1 grid points
    std::vector<StateVec> states;          // N+1
    std::vector<StateVec> mid_velocities;  // one per step (Midpoint, FireFlow)
    std::vector<long long> nfe_cum;        // N+1, evaluations consumed so far
    long long nfe_total = 0;

    const StateVec& endpoint() const { return states.back(); }
    int steps() const { return static_cast<int>(states.size()) - 1; }
};

/// Thrown when an integration produces a non-finite state. Carries the step
/// index and the partial trajectory up to the last finite state.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(int step, Trajectory partial)
        : std::runtime_error("non-finite state at step " + std::to_string(step)),
          step_index(step),
          partial_trajectory(std::move(partial)) {}

    int step_index;
    Trajectory partial_trajectory;
};

/// x + dt*v(x,t). One evaluation.
StateVec step_euler(const VelocityField& field, const StateVec& x, double t, double dt,
                    long long& nfe);

struct MidpointStep {
    StateVec x;
    StateVec mid_velocity;
};

/// Classic midpoint: half Euler step, then a full step with the drift at
/// (x_mid, t + dt/2). Two evaluations.
MidpointStep step_midpoint(const VelocityField& field, const StateVec& x, double t, double dt,
                           long long& nfe);

/// Heun (explicit trapezoid): average of the drifts at both interval ends.
/// Two evaluations.
StateVec step_heun(const VelocityField& field, const StateVec& x, double t, double dt,
                   long long& nfe);

/// Cached-midpoint step. With no cache yet (first step of a run) this is a
/// full midpoint step, two evaluations, and the midpoint velocity is stored.
/// Afterwards the previous interval's midpoint velocity stands in for
/// v(x, t) when forming the half step, so only the midpoint evaluation
/// remains: one evaluation per step, N+1 for the whole run.
void step_fireflow(const VelocityField& field, SolverState& state, double t, double dt);

/// Runs the chosen solver over all steps of the grid with per-step signed
/// dt_i. The same driver serves forward and reverse integration; reverse
/// grids simply carry negative dt. A non-finite state aborts with the step
/// index and the partial trajectory.
Trajectory integrate(const VelocityField& field, const StateVec& x0, const TimeGrid& grid,
                     SolverKind kind);

/// Hook invoked at the start of every reconstruction step. This is the seam
/// where attention-feature editing would intervene in a full image pipeline;
/// that machinery is out of scope here, so the default is a no-op.
using EditHook = std::function<void(int step, double t, StateVec& x)>;

/// Fireflow integration from the data end (t=1 in this artifact) toward the
/// noise end, recording the full cached-velocity record. The caller supplies
/// a grid running data -> noise (decreasing here).
Trajectory invert(const VelocityField& field, const StateVec& x_data, const TimeGrid& grid);

/// Fireflow integration from structured noise back to the data end over the
/// reverse of the inversion grid. Uses nothing from the inversion run beyond
/// the endpoint.
Trajectory reconstruct(const VelocityField& field, const StateVec& x_noise, const TimeGrid& grid,
                       const EditHook& edit_hook = nullptr);

}  // namespace fireflow
