// Timing comparison between the OpenMP kernels and their serial reference
// twins. The two paths share the same per-item arithmetic and fixed-order
// reductions, so outputs must match bitwise; this target reports the wall
// clock for each and verifies that agreement on the way.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "fireflow/field.hpp"
#include "fireflow/gmm.hpp"
#include "fireflow/metrics.hpp"
#include "fireflow/mlp.hpp"
#include "fireflow/parallel.hpp"
#include "fireflow/rng.hpp"

using namespace fireflow;

namespace {

double time_sec(const std::function<void()>& fn, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(end - start).count() / reps;
}

void report(const char* name, double serial, double parallel, bool bitwise_equal) {
    std::printf("%-28s serial %9.4f ms   parallel %9.4f ms   speedup %5.2fx   %s\n", name,
                serial * 1e3, parallel * 1e3, serial / parallel,
                bitwise_equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fireflow kernel benchmark: OpenMP vs serial reference"};
    int n_energy = 3000;
    int n_batch = 512;
    int n_sweep = 256;
    int n_samples = 200000;
    int reps = 3;
    app.add_option("--energy-n", n_energy, "points per side for energy distance");
    app.add_option("--batch", n_batch, "gradient batch size");
    app.add_option("--sweep-n", n_sweep, "round-trip sample count");
    app.add_option("--samples-n", n_samples, "mixture draw count");
    app.add_option("--reps", reps, "repetitions per measurement");
    CLI11_PARSE(app, argc, argv);

    std::printf("workers available: %d\n\n", worker_count());

    {
        const GaussianMixture g({{0.5, {-2.0, 0.0}, {1, 0, 0, 1}}, {0.5, {2.0, 0.0}, {1, 0, 0, 1}}});
        const auto a = g.sample_n(n_energy, 1);
        const auto b = g.sample_n(n_energy, 2);
        double rs = 0, rp = 0;
        const double ts = time_sec([&] { rs = energy_distance_serial(a, b); }, reps);
        const double tp = time_sec([&] { rp = energy_distance(a, b); }, reps);
        report("energy_distance", ts, tp, rs == rp);
    }
    {
        Mlp m = Mlp::xavier_init({3, 64, 64, 64, 2}, 7);
        Rng rng(8);
        Batch batch;
        for (int i = 0; i < n_batch; ++i) {
            batch.x.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
            batch.t.push_back(rng.uniform());
            batch.target.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        }
        Gradients gs, gp;
        double ls = 0, lp = 0;
        const double ts = time_sec([&] { ls = mlp_gradient_serial(m, batch, gs); }, reps);
        const double tp = time_sec([&] { lp = mlp_gradient(m, batch, gp); }, reps);
        bool equal = ls == lp;
        for (std::size_t l = 0; equal && l < gs.weights.size(); ++l) {
            equal = gs.weights[l] == gp.weights[l] && gs.biases[l] == gp.biases[l];
        }
        report("mlp_gradient", ts, tp, equal);
    }
    {
        const auto lin = AnalyticField::linear_scalar(-0.9, 2);
        Rng rng(9);
        std::vector<StateVec> samples;
        for (int i = 0; i < n_sweep; ++i) {
            samples.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        }
        ReconstructionStats ss, sp;
        const double ts =
            time_sec([&] { ss = round_trip_error_serial(lin, samples, 16, SolverKind::FireFlow); },
                     reps);
        const double tp =
            time_sec([&] { sp = round_trip_error(lin, samples, 16, SolverKind::FireFlow); }, reps);
        report("round_trip_error", ts, tp, ss.per_sample == sp.per_sample);
    }
    {
        const GaussianMixture g({{0.5, {-8.0, 3.0}, {1, 0, 0, 1}}, {0.5, {-8.0, -3.0}, {1, 0, 0, 1}}});
        std::vector<StateVec> rs, rp;
        const double ts = time_sec([&] { rs = g.sample_n_serial(n_samples, 3); }, reps);
        const double tp = time_sec([&] { rp = g.sample_n(n_samples, 3); }, reps);
        report("mixture sample_n", ts, tp, rs == rp);
    }
    return 0;
}
