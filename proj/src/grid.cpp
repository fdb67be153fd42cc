#include "fireflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fireflow {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
        throw std::invalid_argument("TimeGrid: need at least 2 points (N >= 1)");
    }
    const bool increasing = points_[1] > points_[0];
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double p = points_[i];
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw std::invalid_argument("TimeGrid: point outside [0,1]: " + std::to_string(p));
        }
        if (i > 0) {
            const double d = points_[i] - points_[i - 1];
            if (d == 0.0 || (d > 0.0) != increasing) {
                throw std::invalid_argument("TimeGrid: points must be strictly monotone");
            }
        }
    }
}

TimeGrid TimeGrid::uniform(double t_start, double t_end, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("TimeGrid::uniform: need n_steps >= 1");
    std::vector<double> pts(n_steps + 1);
    pts.front() = t_start;
    pts.back() = t_end;
    for (int i = 1; i < n_steps; ++i) {
        pts[i] = t_start + (t_end - t_start) * (static_cast<double>(i) / n_steps);
    }
    return TimeGrid(std::move(pts));
}

TimeGrid TimeGrid::power(double gamma, int n_steps) {
    if (!(gamma > 0.0)) throw std::invalid_argument("TimeGrid::power: gamma must be > 0");
    if (n_steps < 1) throw std::invalid_argument("TimeGrid::power: need n_steps >= 1");
    std::vector<double> pts(n_steps + 1);
    pts.front() = 0.0;
    pts.back() = 1.0;
    for (int i = 1; i < n_steps; ++i) {
        pts[i] = std::pow(static_cast<double>(i) / n_steps, gamma);
    }
    return TimeGrid(std::move(pts));
}

double TimeGrid::max_abs_dt() const {
    double m = 0.0;
    for (int i = 0; i < steps(); ++i) m = std::max(m, std::abs(dt(i)));
    return m;
}

TimeGrid TimeGrid::reversed() const {
    std::vector<double> pts(points_.rbegin(), points_.rend());
    return TimeGrid(std::move(pts));
}

}  // namespace fireflow
