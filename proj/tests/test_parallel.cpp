#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fireflow/field.hpp"
#include "fireflow/gmm.hpp"
#include "fireflow/metrics.hpp"
#include "fireflow/parallel.hpp"
#include "fireflow/rng.hpp"

using namespace fireflow;

// The OpenMP kernels must reproduce their serial reference twins bit for
// bit: per-item work is independent and every reduction runs in fixed order.

TEST_CASE("worker count is sane") { CHECK(worker_count() >= 1); }

TEST_CASE("energy distance: parallel == serial bitwise") {
    const GaussianMixture ga({{1.0, {0.0, 0.0}, {1, 0, 0, 1}}});
    const GaussianMixture gb({{0.4, {2.0, 1.0}, {1, 0.2, 0.2, 1}}, {0.6, {-1.0, 0.5}, {2, 0, 0, 1}}});
    const auto a = ga.sample_n(701, 3);
    const auto b = gb.sample_n(557, 4);
    CHECK(energy_distance(a, b) == energy_distance_serial(a, b));
}

TEST_CASE("mixture sampling: parallel == serial bitwise") {
    const GaussianMixture g({{0.25, {-8.0, 3.0}, {1, 0, 0, 1}},
                             {0.25, {-8.0, -3.0}, {1, 0, 0, 1}},
                             {0.5, {0.0, 0.0}, {1.5, 0.4, 0.4, 0.8}}});
    const auto p = g.sample_n(1003, 42);
    const auto s = g.sample_n_serial(1003, 42);
    REQUIRE(p.size() == s.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i][0] == s[i][0]);
        CHECK(p[i][1] == s[i][1]);
    }
}

TEST_CASE("round-trip sweep: parallel == serial bitwise") {
    const auto lin = AnalyticField::linear_scalar(-0.8, 2);
    Rng rng(9);
    std::vector<StateVec> samples;
    for (int i = 0; i < 64; ++i) {
        samples.push_back({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
    }
    const ReconstructionStats p = round_trip_error(lin, samples, 8, SolverKind::FireFlow);
    const ReconstructionStats s = round_trip_error_serial(lin, samples, 8, SolverKind::FireFlow);
    REQUIRE(p.per_sample.size() == s.per_sample.size());
    for (std::size_t i = 0; i < p.per_sample.size(); ++i) {
        CHECK(p.per_sample[i] == s.per_sample[i]);
    }
    CHECK(p.mean_err == s.mean_err);
    CHECK(p.p95_err == s.p95_err);
}
