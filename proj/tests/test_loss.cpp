#include <catch2/catch_amalgamated.hpp>

#include <csb/loss.hpp>
#include <csb/models.hpp>
#include <csb/rng.hpp>

#include <cmath>

using namespace csb;

namespace {

Trajectory traj(std::vector<double> values) {
    std::vector<double> t(values.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    return Trajectory(TimeGrid(std::move(t)), std::move(values));
}

}  // namespace

TEST_CASE("loss hand values") {
    CHECK(loss(traj({3.0, 1.0, 4.0}), traj({3.0, 1.0, 4.0})) == 0.0);
    CHECK(loss(traj({2.0, 2.0}), traj({1.0, 1.0})) == 1.0);

    LossConfig mae;
    mae.alpha = 1.0;
    CHECK(loss(traj({1.0, 3.0}), traj({0.0, 1.0}), mae) == 1.5);
}

TEST_CASE("loss validates inputs") {
    CHECK_THROWS_AS(loss(traj({1.0, 2.0}), Trajectory(TimeGrid({0.0, 2.0}), {1.0, 2.0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(loss(traj({std::nan("")}), traj({1.0})), std::invalid_argument);
    LossConfig bad;
    bad.alpha = 0.5;
    CHECK_THROWS_AS(loss(traj({1.0}), traj({2.0}), bad), std::invalid_argument);
}

TEST_CASE("loss is symmetric in the residual sign") {
    Trajectory base = traj({1.0, 2.0, 3.0, 4.0});
    Trajectory up = traj({1.5, 2.25, 3.75, 4.125});
    Trajectory down = traj({0.5, 1.75, 2.25, 3.875});
    for (double alpha : {1.0, 1.5, 2.0, 3.0}) {
        LossConfig cfg;
        cfg.alpha = alpha;
        CHECK(loss(up, base, cfg) == Catch::Approx(loss(down, base, cfg)).epsilon(1e-15));
    }
}

TEST_CASE("alpha=2 punishes concentrated error harder than spread error") {
    Trajectory base = traj({0.0, 0.0});
    Trajectory concentrated = traj({2.0, 0.0});
    Trajectory spread = traj({1.0, 1.0});

    LossConfig mae;
    mae.alpha = 1.0;
    CHECK(loss(concentrated, base, mae) == loss(spread, base, mae));  // both 1.0

    CHECK(loss(concentrated, base) == 2.0);
    CHECK(loss(spread, base) == 1.0);
}

TEST_CASE("threshold hand values") {
    CHECK(threshold(traj({5.0, 3.0}), 1.0).threshold_value == 0.0);
    CHECK(threshold(traj({1.0, 1.0, 1.0, 1.0}), 1.3).threshold_value ==
          Catch::Approx(0.09).epsilon(1e-12));
    CHECK(threshold(traj({2.0, 0.0}), 1.5).threshold_value == Catch::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(threshold(traj({1.0}), 0.0), std::invalid_argument);
}

TEST_CASE("threshold matches its closed form within a few ulps") {
    RngStream rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t len = 10 + rng.below(50);
        std::vector<double> values(len);
        double mean_sq = 0.0;
        for (double& v : values) {
            v = rng.uniform(-100.0, 100.0);
            mean_sq += v * v;
        }
        mean_sq /= static_cast<double>(len);
        for (double lambda : {1.1, 1.3, 2.0}) {
            const double got = threshold(traj(values), lambda).threshold_value;
            const double want = (lambda - 1.0) * (lambda - 1.0) * mean_sq;
            const double slack = 8.0 * std::numeric_limits<double>::epsilon() * mean_sq;
            CHECK(std::abs(got - want) <= slack);
        }
    }
}

TEST_CASE("dissimilarity of a point against itself is zero") {
    TimeGrid g({0.0, 1.0});
    CHECK(dissimilarity(identity_model(), {1.0}, {1.0}, g) == 0.0);
    CHECK(dissimilarity(identity_model(), {1.3}, {1.0}, g) ==
          Catch::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("objective counts evaluations and flags failures") {
    ModelDefinition blowup;
    blowup.name = "blowup";
    blowup.factor_names = {"x"};
    blowup.state_dim = 1;
    blowup.initial_state = [](const FactorVector& x) { return State{x[0]}; };
    blowup.rhs = [](double, const State& y, const FactorVector&, State& d) {
        d[0] = y[0] * y[0];  // finite-time escape for y0 >= 1
    };
    blowup.observable = [](const State& y) { return y[0]; };

    TimeGrid g({0.0, 5.0});
    EvalCounter counter;
    DissimilarityObjective phi(blowup, reference_trajectory(blowup, {0.1}, g), LossConfig{},
                               IntegratorConfig{}, &counter);

    CHECK(phi({0.1}) == 0.0);
    CHECK(std::isinf(phi({2.0})));  // diverges before t=5
    CHECK(counter.evals.load() == 2);
    CHECK(counter.failures.load() == 1);
}

TEST_CASE("perturbing one transmission factor inside its final interval stays under the threshold") {
    const FactorVector nominal{2110000.0, 670.0, 281000.0, 7800.0, 0.064,
                               0.1665,    0.48,  0.00066,  0.5};
    TimeGrid g = TimeGrid::regular(0.0, 52.0, 1.0);
    ModelDefinition m = dengue_model();
    Trajectory ref = reference_trajectory(m, nominal, g);
    ThresholdSpec thr = threshold(ref, 1.3);

    FactorVector x = nominal;
    x[6] = 0.49;  // human transmission rate at the upper end of its shrunken interval
    CHECK(dissimilarity(m, x, nominal, g) <= thr.threshold_value);
}
