#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "revs/residence_opt.hpp"

using namespace revs;

namespace {

const Horizon kHz{16, 24};

Eigen::VectorXd stock_rate() { return rotate_to_horizon(default_tariff().rates, kHz); }
EvSpec stock_ev() { return EvSpec{20.0, 4.8, 0, 12, 0.2, 0.9}; }

ResidenceAdmmState random_state(rng::Engine& g, int T, double kappa) {
    ResidenceAdmmState st;
    st.p_local = testutil::random_vector(g, T, 0.0, 8.0);
    st.p_operator = testutil::random_vector(g, T, 0.0, 8.0);
    st.gamma = testutil::random_vector(g, T, -0.2, 0.2);
    st.kappa = kappa;
    return st;
}

}  // namespace

TEST_CASE("tariff-optimal schedule charges the cheapest overnight hours") {
    rng::Engine g(3);
    const Eigen::VectorXd rate = stock_rate();
    const EvSpec spec = stock_ev();
    const Eigen::VectorXd p0 = testutil::random_vector(g, 24, 0.2, 3.0);

    const ResidenceSolution sol = solve_individual(p0, spec, rate);
    CHECK(sol.schedule.on_count() == 3);
    for (int t = 0; t < 24; ++t) {
        if (!sol.schedule.z[static_cast<std::size_t>(t)]) continue;
        const int hour = kHz.hour_of(t);
        CHECK(hour >= 0);
        CHECK(hour < 5);
    }
    const double ev_cost = energy_cost_usd(rate, sol.p_kw) - energy_cost_usd(rate, p0);
    CHECK(ev_cost == Catch::Approx(3 * 4.8 * 0.07866).margin(1e-9));
    CHECK(sol.objective == Catch::Approx(energy_cost_usd(rate, sol.p_kw)).margin(1e-12));
}

TEST_CASE("no required charge means no charging") {
    const Eigen::VectorXd rate = stock_rate();
    EvSpec spec = stock_ev();
    spec.soc_final = spec.soc_init;
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(24, 1.5);
    const ResidenceSolution sol = solve_individual(p0, spec, rate);
    CHECK(sol.schedule.on_count() == 0);
    CHECK(sol.objective == Catch::Approx(energy_cost_usd(rate, p0)).margin(1e-12));
}

TEST_CASE("flat tariff ties break toward the earliest intervals") {
    const Eigen::VectorXd rate = Eigen::VectorXd::Constant(24, 0.1);
    const EvSpec spec = stock_ev();
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(24, 1.0);
    const ResidenceSolution sol = solve_individual(p0, spec, rate);
    CHECK(sol.schedule.z[0] == 1);
    CHECK(sol.schedule.z[1] == 1);
    CHECK(sol.schedule.z[2] == 1);
    CHECK(sol.schedule.on_count() == 3);
}

TEST_CASE("vanishing penalty reduces the consensus step to the plain problem") {
    rng::Engine g(11);
    const Eigen::VectorXd rate = stock_rate();
    const EvSpec spec = stock_ev();
    const Eigen::VectorXd p0 = testutil::random_vector(g, 24, 0.2, 3.0);
    const ResidenceSolution ind = solve_individual(p0, spec, rate);

    ResidenceAdmmState st;
    st.p_local = ind.p_kw;
    st.p_operator = ind.p_kw;
    st.gamma = Eigen::VectorXd::Zero(24);
    st.kappa = 1e-9;
    const ResidenceSolution step = solve_admm_step(p0, spec, rate, st);
    CHECK(step.schedule.z == ind.schedule.z);

    const ResidenceSolution ref = brute_force_oracle(p0, spec, rate, &st);
    CHECK(step.objective == Catch::Approx(ref.objective).margin(1e-12));
}

TEST_CASE("agreeing-at-base-load state keeps the on-delta tariff-driven") {
    // with ptilde = plocal = p0, the quadratic terms cancel against the
    // linear ones and the on-delta is c*P + kappa*P^2/2, so a flat tariff
    // still picks the earliest interval
    const Eigen::VectorXd rate = Eigen::VectorXd::Constant(24, 0.1);
    EvSpec spec = stock_ev();
    spec.soc_final = 0.25;  // one interval suffices
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(24, 2.0);

    ResidenceAdmmState st;
    st.p_local = p0;
    st.p_operator = p0;
    st.gamma = Eigen::VectorXd::Zero(24);
    st.kappa = 2.0;
    const ResidenceSolution step = solve_admm_step(p0, spec, rate, st);
    CHECK(step.schedule.on_count() == 1);
    CHECK(step.schedule.z[static_cast<std::size_t>(spec.window_first)] == 1);

    const ResidenceSolution ref = brute_force_oracle(p0, spec, rate, &st);
    CHECK(step.objective == Catch::Approx(ref.objective).margin(1e-12));
}

TEST_CASE("a window exactly as long as the required charge is forced on") {
    rng::Engine g(19);
    const Eigen::VectorXd rate = stock_rate();
    EvSpec spec = stock_ev();
    spec.window_first = 4;
    spec.window_last = 6;  // three intervals for three required charges

    ResidenceAdmmState st = random_state(g, 24, 5.0);
    const ResidenceSolution step =
        solve_admm_step(testutil::random_vector(g, 24, 0.0, 3.0), spec, rate, st);
    CHECK(step.schedule.z[4] == 1);
    CHECK(step.schedule.z[5] == 1);
    CHECK(step.schedule.z[6] == 1);
    CHECK(step.schedule.on_count() == 3);
}

TEST_CASE("consensus step matches exhaustive enumeration on random instances") {
    rng::Engine g(101);
    const double kappas[] = {0.1, 1.0, 10.0};
    for (int rep = 0; rep < 120; ++rep) {
        const EvSpec spec = testutil::random_ev_spec(g, 24);
        const Eigen::VectorXd p0 = testutil::random_vector(g, 24, 0.0, 4.0);
        const Eigen::VectorXd rate = testutil::random_vector(g, 24, 0.05, 0.25);
        const ResidenceAdmmState st = random_state(g, 24, kappas[rep % 3]);

        const ResidenceSolution fast = solve_admm_step(p0, spec, rate, st);
        const ResidenceSolution ref = brute_force_oracle(p0, spec, rate, &st);
        const double tol = 1e-9 * std::max(1.0, std::abs(ref.objective));
        CHECK(std::abs(fast.objective - ref.objective) <= tol);
        CHECK_NOTHROW(soc_trajectory(spec, fast.schedule.z));
    }
}

TEST_CASE("raising an interval's dual keeps it selected") {
    rng::Engine g(211);
    for (int rep = 0; rep < 40; ++rep) {
        const EvSpec spec = testutil::random_ev_spec(g, 24);
        const Eigen::VectorXd p0 = testutil::random_vector(g, 24, 0.0, 4.0);
        const Eigen::VectorXd rate = testutil::random_vector(g, 24, 0.05, 0.25);
        ResidenceAdmmState st = random_state(g, 24, 1.0);
        const ResidenceSolution before = solve_admm_step(p0, spec, rate, st);
        int chosen = -1;
        for (int t = spec.window_first; t <= spec.window_last; ++t)
            if (before.schedule.z[static_cast<std::size_t>(t)]) chosen = t;
        if (chosen < 0) continue;
        st.gamma(chosen) += rng::uniform(g, 0.01, 0.5);
        const ResidenceSolution after = solve_admm_step(p0, spec, rate, st);
        CHECK(after.schedule.z[static_cast<std::size_t>(chosen)] == 1);
    }
}

TEST_CASE("positively scaling cost, duals and penalty leaves the schedule unchanged") {
    rng::Engine g(307);
    for (int rep = 0; rep < 30; ++rep) {
        const EvSpec spec = testutil::random_ev_spec(g, 24);
        const Eigen::VectorXd p0 = testutil::random_vector(g, 24, 0.0, 4.0);
        const Eigen::VectorXd rate = testutil::random_vector(g, 24, 0.05, 0.25);
        ResidenceAdmmState st = random_state(g, 24, 2.0);
        const double s = rng::uniform(g, 0.2, 5.0);
        const ResidenceSolution a = solve_admm_step(p0, spec, rate, st);
        ResidenceAdmmState scaled = st;
        scaled.gamma *= s;
        scaled.kappa *= s;
        const ResidenceSolution b = solve_admm_step(p0, spec, Eigen::VectorXd(rate * s), scaled);
        CHECK(a.schedule.z == b.schedule.z);
    }
}

TEST_CASE("enumerator handles the degenerate corners") {
    const Eigen::VectorXd rate = stock_rate();

    // needs no charge and every delta is positive: stays off
    EvSpec lazy = stock_ev();
    lazy.soc_final = lazy.soc_init;
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(24, 1.0);
    CHECK(brute_force_oracle(p0, lazy, rate).schedule.on_count() == 0);

    // infeasible spec is reported, not silently truncated
    EvSpec cramped = stock_ev();
    cramped.window_last = cramped.window_first + 1;
    CHECK_THROWS_AS(brute_force_oracle(p0, cramped, rate), DataError);

    // windows beyond the enumeration guard are refused
    EvSpec wide = stock_ev();
    wide.window_first = 0;
    wide.window_last = 21;
    CHECK_THROWS_AS(brute_force_oracle(p0, wide, rate), DataError);
}
