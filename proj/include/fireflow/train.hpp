#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fireflow/gmm.hpp"
#include "fireflow/mlp.hpp"
#include "fireflow/state.hpp"

namespace fireflow {

/// Endpoint pairs (X_0, X_1) the regression trains on. Independent pairs
/// come from sampling both marginals separately; model-generated pairs come
/// from integrating a trained flow (the reflow re-coupling).
struct Coupling {
    enum class Provenance { Independent, ModelGenerated };

    std::vector<StateVec> x0;
    std::vector<StateVec> x1;
    Provenance provenance = Provenance::Independent;

    int size() const { return static_cast<int>(x0.size()); }
};

/// Linear interpolation X_t = t*X_1 + (1-t)*X_0.
StateVec interpolate(const StateVec& x0, const StateVec& x1, double t);

/// Mean of ||(X_1 - X_0) - v_theta(X_t, t)||^2 over the batch.
double flow_matching_loss(const Mlp& net, const std::vector<StateVec>& x0,
                          const std::vector<StateVec>& x1, const std::vector<double>& t);

/// Where training pairs come from; draws consume the caller's stream.
class CouplingSource {
  public:
    virtual ~CouplingSource() = default;
    virtual void sample_pair(Rng& rng, StateVec& x0, StateVec& x1) const = 0;
};

/// Independent draws from the two marginals (the 1-rectified coupling).
class IndependentCoupling final : public CouplingSource {
  public:
    IndependentCoupling(GaussianMixture pi0, GaussianMixture pi1)
        : pi0_(std::move(pi0)), pi1_(std::move(pi1)) {}
    void sample_pair(Rng& rng, StateVec& x0, StateVec& x1) const override {
        x0 = pi0_.sample(rng);
        x1 = pi1_.sample(rng);
    }

  private:
    GaussianMixture pi0_, pi1_;
};

/// Uniform draws with replacement from a fixed pair set (reflow retraining).
class DatasetCoupling final : public CouplingSource {
  public:
    explicit DatasetCoupling(const Coupling& data) : data_(&data) {
        if (data.size() == 0) throw std::invalid_argument("DatasetCoupling: empty coupling");
    }
    void sample_pair(Rng& rng, StateVec& x0, StateVec& x1) const override {
        const int i = static_cast<int>(rng.uniform() * data_->size());
        const int j = i < data_->size() ? i : data_->size() - 1;
        x0 = data_->x0[j];
        x1 = data_->x1[j];
    }

  private:
    const Coupling* data_;
};

struct TrainConfig {
    int dim = 2;
    std::vector<int> hidden{64, 64, 64};
    int batch_size = 128;
    int iters = 3000;
    double lr = 1e-3;
    std::uint64_t seed = 1024;
};

struct TrainResult {
    Mlp net;
    std::vector<double> loss_curve;  // one entry per iteration
};

/// Thrown when the training loss turns non-finite.
class TrainingDiverged : public std::runtime_error {
  public:
    TrainingDiverged(int iter)
        : std::runtime_error("training loss non-finite at iteration " + std::to_string(iter)),
          iteration(iter) {}
    int iteration;
};

/// Regresses v_theta(X_t, t) onto X_1 - X_0 with t uniform per batch
/// element. Deterministic per (config, source): fixed seeds yield
/// bit-identical parameters.
TrainResult train_rectified_flow(const TrainConfig& config, const CouplingSource& source);

struct ReflowResult {
    Coupling coupling;     // model-generated pairs
    TrainResult retrained; // 2-rectified network
};

/// Reflow re-coupling: draw X_0 from pi0, integrate the trained flow with a
/// fine cached-midpoint grid (default 100 steps) to obtain the paired X_1,
/// then retrain from scratch on those pairs.
ReflowResult reflow(const Mlp& trained, const GaussianMixture& pi0, const TrainConfig& config,
                    int n_pairs, int gen_steps = 100);

/// Mean over sampled trajectories of the step-to-step drift variation
/// ||v(X_{t+dt}, t+dt) - v(X_t, t)||, reported (not bounded) as the
/// empirical constant-velocity statistic of a trained model.
double velocity_variation(const Mlp& net, const GaussianMixture& pi0, int n_paths, int steps,
                          std::uint64_t seed);

}  // namespace fireflow
