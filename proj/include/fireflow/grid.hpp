#pragma once

#include <vector>

namespace fireflow {

/// Strictly monotone sequence of time points t_0..t_N in [0, 1].
/// Direction is encoded by the ordering: increasing grids integrate the
/// forward process, decreasing grids the reverse one (signed dt, the drift
/// is never negated). N = points-1 steps; per-step dt_i = t_{i+1} - t_i.
class TimeGrid {
  public:
    explicit TimeGrid(std::vector<double> points);

    /// N+1 evenly spaced points from t_start to t_end (either direction).
    static TimeGrid uniform(double t_start, double t_end, int n_steps);

    /// Increasing power schedule t_i = (i/N)^gamma on [0, 1].
    static TimeGrid power(double gamma, int n_steps);

    int steps() const { return static_cast<int>(points_.size()) - 1; }
    double point(int i) const { return points_[i]; }
    double dt(int i) const { return points_[i + 1] - points_[i]; }
    bool forward() const { return points_.back() > points_.front(); }
    double max_abs_dt() const;

    /// Mirror grid: same points in reverse order.
    TimeGrid reversed() const;

    const std::vector<double>& points() const { return points_; }

  private:
    std::vector<double> points_;
};

}  // namespace fireflow
