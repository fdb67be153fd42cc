#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "fireflow/solvers.hpp"
#include "fireflow/train.hpp"

namespace fireflow {

/// Shortest-faithful decimal formatting: %.17g round-trips every double.
std::string g17(double v);

/// Minimal CSV emitter: UTF-8, LF line endings, no quoting (callers pass
/// plain tokens).
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path);

    void row(const std::vector<std::string>& cells);
    void close();

  private:
    std::ofstream out_;
    std::string path_;
};

/// Trajectory schema: step,t,x_0..x_{d-1},nfe_cum
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

/// Coupling schema: x0_0,x0_1,x1_0,x1_1
void write_coupling_csv(const Coupling& coupling, const std::string& path);

}  // namespace fireflow
