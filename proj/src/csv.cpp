#include "fireflow/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace fireflow {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error("cannot open CSV for writing: " + path);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw std::runtime_error("CSV write failed: " + path_);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    CsvWriter csv(path);
    const std::size_t d = traj.states.empty() ? 0 : traj.states[0].size();
    std::vector<std::string> header{"step", "t"};
    for (std::size_t k = 0; k < d; ++k) header.push_back("x_" + std::to_string(k));
    header.push_back("nfe_cum");
    csv.row(header);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        std::vector<std::string> cells{std::to_string(i), g17(traj.times[i])};
        for (double c : traj.states[i]) cells.push_back(g17(c));
        cells.push_back(std::to_string(traj.nfe_cum[i]));
        csv.row(cells);
    }
    csv.close();
}

void write_coupling_csv(const Coupling& coupling, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"x0_0", "x0_1", "x1_0", "x1_1"});
    for (int i = 0; i < coupling.size(); ++i) {
        csv.row({g17(coupling.x0[i][0]), g17(coupling.x0[i][1]), g17(coupling.x1[i][0]),
                 g17(coupling.x1[i][1])});
    }
    csv.close();
}

}  // namespace fireflow
