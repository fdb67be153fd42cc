#include "fireflow/train.hpp"

#include <cmath>

#include "fireflow/parallel.hpp"
#include "fireflow/solvers.hpp"

namespace fireflow {

StateVec interpolate(const StateVec& x0, const StateVec& x1, double t) {
    if (x0.size() != x1.size()) throw std::invalid_argument("interpolate: dim mismatch");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolate: t outside [0,1]");
    StateVec out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = t * x1[i] + (1.0 - t) * x0[i];
    return out;
}

double flow_matching_loss(const Mlp& net, const std::vector<StateVec>& x0,
                          const std::vector<StateVec>& x1, const std::vector<double>& t) {
    if (x0.size() != x1.size() || x0.size() != t.size() || x0.empty()) {
        throw std::invalid_argument("flow_matching_loss: ragged or empty batch");
    }
    Batch batch;
    batch.x.reserve(x0.size());
    batch.target.reserve(x0.size());
    batch.t = t;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        batch.x.push_back(interpolate(x0[i], x1[i], t[i]));
        batch.target.push_back(sub(x1[i], x0[i]));
    }
    return mlp_loss(net, batch);
}

TrainResult train_rectified_flow(const TrainConfig& config, const CouplingSource& source) {
    if (config.batch_size < 1 || config.iters < 1 || !(config.lr > 0.0)) {
        throw std::invalid_argument("train: batch size, iterations, and lr must be positive");
    }
    std::vector<int> sizes;
    sizes.push_back(config.dim + 1);
    for (int h : config.hidden) sizes.push_back(h);
    sizes.push_back(config.dim);

    TrainResult result;
    result.net = Mlp::xavier_init(sizes, config.seed);
    result.loss_curve.reserve(config.iters);

    AdamState opt = AdamState::init(result.net, config.lr);
    Rng rng(derive_seed(config.seed, 0x7261696eull));  // data stream, separate from init

    Batch batch;
    batch.x.resize(config.batch_size);
    batch.t.resize(config.batch_size);
    batch.target.resize(config.batch_size);
    StateVec x0, x1;
    Gradients grads;

    for (int iter = 0; iter < config.iters; ++iter) {
        // The batch is drawn from a single serial stream; only the gradient
        // accumulation over samples is parallel (fixed-order block reduce).
        for (int b = 0; b < config.batch_size; ++b) {
            source.sample_pair(rng, x0, x1);
            const double t = rng.uniform();
            batch.x[b] = interpolate(x0, x1, t);
            batch.t[b] = t;
            batch.target[b] = sub(x1, x0);
        }
        const double loss = mlp_gradient(result.net, batch, grads);
        if (!std::isfinite(loss)) throw TrainingDiverged(iter);
        adam_step(result.net, grads, opt);
        result.loss_curve.push_back(loss);
    }
    return result;
}

ReflowResult reflow(const Mlp& trained, const GaussianMixture& pi0, const TrainConfig& config,
                    int n_pairs, int gen_steps) {
    if (n_pairs < 1) throw std::invalid_argument("reflow: n_pairs must be >= 1");
    const MlpField field(trained);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, gen_steps);

    ReflowResult result;
    result.coupling.provenance = Coupling::Provenance::ModelGenerated;
    result.coupling.x0 = pi0.sample_n(n_pairs, derive_seed(config.seed, 0x636f7570ull));
    result.coupling.x1.resize(n_pairs);

    // Pair generation parallelizes across samples; each trajectory is
    // independent and deterministic.
    parallel_for(n_pairs, [&](int i) {
        Trajectory traj = integrate(field, result.coupling.x0[i], grid, SolverKind::FireFlow);
        result.coupling.x1[i] = traj.endpoint();
    });

    result.retrained = train_rectified_flow(config, DatasetCoupling(result.coupling));
    return result;
}

double velocity_variation(const Mlp& net, const GaussianMixture& pi0, int n_paths, int steps,
                          std::uint64_t seed) {
    const MlpField field(net);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, steps);
    std::vector<StateVec> starts = pi0.sample_n(n_paths, seed);
    std::vector<double> per_path(n_paths, 0.0);
    parallel_for(n_paths, [&](int i) {
        Trajectory traj = integrate(field, starts[i], grid, SolverKind::Euler);
        double acc = 0.0;
        StateVec prev = field.evaluate(traj.states[0], traj.times[0]);
        for (int s = 1; s <= traj.steps(); ++s) {
            StateVec cur = field.evaluate(traj.states[s], traj.times[s]);
            acc += l2_distance(cur, prev);
            prev = std::move(cur);
        }
        per_path[i] = acc / traj.steps();
    });
    double mean = 0.0;
    for (double v : per_path) mean += v;
    return mean / n_paths;
}

}  // namespace fireflow
