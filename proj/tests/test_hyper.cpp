#include <doctest.h>

#include <cmath>

#include "fedsim/errors.hpp"
#include "fedsim/hyper.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;

TEST_SUITE("hyper") {

TEST_CASE("constant policy pins its fixed defaults") {
    const auto d = constant_policy();
    CHECK(d.lr == 5e-5);
    CHECK(d.epochs_per_round == 1);

    auto policy = make_hyper_policy("constant", HyperParams{});
    CHECK(policy->decide(0).lr == 5e-5);
    CHECK(policy->decide(69).lr == 5e-5);
    policy->observe(0, 0.9, 1.0); // history must not matter
    CHECK(policy->decide(1).lr == 5e-5);
    CHECK(policy->decide(1).epochs_per_round == 1);
}

TEST_CASE("plateau: 15 non-improving rounds trigger exactly one halving") {
    PlateauState st;
    st.current_lr = 2e-4;
    st.patience = 15;
    st.decay_factor = 0.5;

    double lr = plateau_step(st, 0.5); // establishes the baseline
    CHECK(lr == 2e-4);
    for (int i = 0; i < 14; ++i) {
        lr = plateau_step(st, 0.5);
        CHECK(lr == 2e-4); // not yet
    }
    lr = plateau_step(st, 0.5); // 15th non-improving round
    CHECK(lr == 1e-4);
    CHECK(st.rounds_since_improvement == 0); // counter resets on decay
}

TEST_CASE("plateau: improvement inside the window resets the counter") {
    PlateauState st;
    st.current_lr = 2e-4;
    for (int i = 0; i < 14; ++i) plateau_step(st, 0.5);
    CHECK(plateau_step(st, 0.6) == 2e-4); // improvement at round 14
    CHECK(st.rounds_since_improvement == 0);
    for (int i = 0; i < 14; ++i) CHECK(plateau_step(st, 0.6) == 2e-4);
}

TEST_CASE("plateau: monotonically improving metric never decays") {
    PlateauState st;
    st.current_lr = 2e-4;
    double metric = 0.1;
    for (int i = 0; i < 100; ++i) {
        metric += 0.001;
        CHECK(plateau_step(st, metric) == 2e-4);
    }
}

TEST_CASE("plateau: lr after k decays is lr0 * factor^k exactly") {
    PlateauState st;
    st.current_lr = 2e-4;
    st.patience = 3;
    st.decay_factor = 0.5;
    plateau_step(st, 0.5);
    int decays = 0;
    double lr = st.current_lr;
    for (int i = 0; i < 30; ++i) {
        lr = plateau_step(st, 0.5);
        if ((i + 1) % 3 == 0) ++decays;
    }
    CHECK(decays == 10);
    CHECK(lr == 2e-4 * std::pow(0.5, 10)); // halvings are exact in binary fp
    CHECK(st.rounds_since_improvement <= st.patience);
}

TEST_CASE("plateau validates its parameters") {
    PlateauState st;
    st.patience = 0;
    CHECK_THROWS_AS(plateau_step(st, 0.5), UsageError);
    st.patience = 5;
    st.decay_factor = 1.0;
    CHECK_THROWS_AS(plateau_step(st, 0.5), UsageError);
}

TEST_CASE("adaptive_epoch worked examples") {
    CHECK(adaptive_epoch(2.0, 2.0, 8) == 8);   // ratio 1
    CHECK(adaptive_epoch(2.0, 0.5, 8) == 4);   // ceil(0.5 * 8)
    CHECK(adaptive_epoch(1.0, 0.3, 8) == 5);   // ceil(4.3818)
}

TEST_CASE("adaptive_epoch clamps to [1, E0] and is monotone in Ft") {
    Rng rng(1000);
    for (int trial = 0; trial < 1000; ++trial) {
        const double f0 = rng.uniform(1e-6, 10.0);
        const double ft = rng.uniform(0.0, 30.0);
        const int e0 = 1 + int(rng.uniform_int(12));
        const int e = adaptive_epoch(f0, ft, e0);
        CHECK(e >= 1);
        CHECK(e <= e0);
    }

    const double f0 = 2.0;
    int prev = 1;
    for (double ft = 0.0; ft <= 4.0; ft += 0.05) {
        const int e = adaptive_epoch(f0, ft, 8);
        CHECK(e >= prev);
        prev = e;
    }

    CHECK(adaptive_epoch(1.0, 0.0, 8) == 1);     // floor at 1
    CHECK(adaptive_epoch(1.0, 100.0, 8) == 8);   // rising loss capped at E0
    CHECK_THROWS_AS(adaptive_epoch(0.0, 1.0, 8), StateError);
    CHECK_THROWS_AS(adaptive_epoch(1.0, -0.1, 8), UsageError);
    CHECK_THROWS_AS(adaptive_epoch(1.0, 1.0, 0), UsageError);
}

TEST_CASE("combined policy composes both rules") {
    PlateauState st;
    st.current_lr = 2e-4;
    st.patience = 15;
    st.decay_factor = 0.5;

    // round 0 with fresh state and flat loss
    auto d = combined_policy(st, 1.0, 1.0, 8, 0.5);
    CHECK(d.lr == 2e-4);
    CHECK(d.epochs_per_round == 8);

    // loss quartered and plateau hit at the same time: (1e-4, 4)
    PlateauState st2;
    st2.current_lr = 2e-4;
    st2.patience = 15;
    st2.decay_factor = 0.5;
    plateau_step(st2, 0.5);
    for (int i = 0; i < 14; ++i) plateau_step(st2, 0.5);
    d = combined_policy(st2, 2.0, 0.5, 8, 0.5); // 15th flat round
    CHECK(d.lr == 1e-4);
    CHECK(d.epochs_per_round == 4);

    // improving metric and constant loss: nothing moves
    PlateauState st3;
    st3.current_lr = 2e-4;
    d = combined_policy(st3, 1.5, 1.5, 8, 0.9);
    CHECK(d.lr == 2e-4);
    CHECK(d.epochs_per_round == 8);
}

TEST_CASE("policy objects: engine-facing behaviour") {
    // lr_plateau decides 2e-4 until a 15-round plateau is observed
    auto plateau = make_hyper_policy("lr_plateau", HyperParams{});
    CHECK(plateau->decide(0).lr == 2e-4);
    CHECK(plateau->decide(0).epochs_per_round == 1);
    plateau->observe(0, 0.5, 1.0);
    for (int r = 1; r <= 15; ++r) plateau->observe(r, 0.5, 1.0);
    CHECK(plateau->decide(16).lr == 1e-4);

    // adaptive_epoch anchors F0 at the first observed loss
    auto adaptive = make_hyper_policy("adaptive_epoch", HyperParams{});
    CHECK(adaptive->decide(0).epochs_per_round == 8);
    CHECK(adaptive->decide(0).lr == 5e-5);
    adaptive->observe(0, 0.1, 2.0); // F0 = 2
    CHECK(adaptive->decide(1).epochs_per_round == 8);
    adaptive->observe(1, 0.2, 0.5); // Ft = 0.5
    CHECK(adaptive->decide(2).epochs_per_round == 4);

    // combined starts at (2e-4, 8)
    auto combined = make_hyper_policy("adaptive_epoch+lr_plateau", HyperParams{});
    CHECK(combined->decide(0).lr == 2e-4);
    CHECK(combined->decide(0).epochs_per_round == 8);

    CHECK_THROWS_AS(make_hyper_policy("cosine", HyperParams{}), ConfigError);
}

} // TEST_SUITE
