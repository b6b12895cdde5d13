#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tradewar/calibration.hpp"
#include "tradewar/scenario.hpp"
#include "tradewar/solver.hpp"
#include "tradewar/toy.hpp"

#include <cmath>

using namespace tradewar;

namespace {

// Two-country single-sector economy whose baseline replicates the endowment
// model's zero-tariff equilibrium, valued in good-1 units.
EconomyData economy_from_toy(const ToyParams& params) {
    ToyParams base = params;
    base.tau1 = base.tau2 = 0.0;
    const ToyEquilibrium eq = solve_toy(base);

    EconomyData data;
    data.countries = {"C1", "C2"};
    data.sectors = {{"g1", "good", params.sigma1, false}};
    data.flows = Array3(2, 2, 1, 0.0);
    data.flows(0, 0, 0) = eq.c11;
    data.flows(0, 1, 0) = eq.p * eq.c21;
    data.flows(1, 0, 0) = eq.c12;
    data.flows(1, 1, 0) = eq.p * eq.c22;
    data.io_usage = Array3(2, 1, 1, 0.0);
    data.tariffs = TariffSchedule::ones(2, 1);
    data.gdp = {eq.c11 + eq.p * eq.c21, eq.c12 + eq.p * eq.c22};
    return data;
}

SolverOptions pin_wage_options() {
    // Good 1 is the endowment model's numeraire; pinning Country 1's wage keeps
    // the fixed transfer denominated in the same units.
    SolverOptions opts;
    opts.numeraire = SolverOptions::Numeraire::PinWage;
    opts.pinned_country = 0;
    return opts;
}

}  // namespace

TEST_CASE("counterfactual tariffs reproduce the endowment-model oracle") {
    for (const double d : {0.0, 0.08}) {
        ToyParams params;
        params.sigma1 = params.sigma2 = 4.0;
        params.d = d;
        const EconomyData data = economy_from_toy(params);
        const CalibratedModel m = calibrate(data);
        CHECK(m.D[0] == doctest::Approx(d).epsilon(1e-9));

        for (const double tau1 : {0.0, 0.1, 0.3}) {
            TariffSchedule sched = m.baseline_tariffs;
            sched.tau(0, 1, 0) = 1.0 + tau1;
            const SolveOutcome out = solve_counterfactual(m, sched, pin_wage_options());
            REQUIRE_MESSAGE(out.ok(), out.message);

            ToyParams cf = params;
            cf.tau1 = tau1;
            const ToyEquilibrium oracle = solve_toy(cf);

            // quantities consumed of each origin's good
            CHECK(out.eq.y_bilateral(0, 0, 0) == doctest::Approx(oracle.c11).epsilon(1e-8));
            CHECK(out.eq.y_bilateral(0, 1, 0) == doctest::Approx(oracle.c21).epsilon(1e-8));
            CHECK(out.eq.y_bilateral(1, 0, 0) == doctest::Approx(oracle.c12).epsilon(1e-8));
            CHECK(out.eq.y_bilateral(1, 1, 0) == doctest::Approx(oracle.c22).epsilon(1e-8));
            // relative producer price of good 2 and tariff revenue
            const double p_rel = out.eq.w[1] / out.eq.w[0];
            CHECK(p_rel == doctest::Approx(oracle.p).epsilon(1e-8));
            CHECK(out.eq.tariff_revenue[0] == doctest::Approx(oracle.T1).epsilon(1e-7));
        }
    }
}

TEST_CASE("allocations are invariant to the numeraire choice") {
    ScenarioSpec spec;
    spec.n_countries = 3;
    spec.n_goods_sectors = 2;
    spec.include_io = true;
    const CalibratedModel m = calibrate(symmetric_world(spec));
    TariffSchedule sched = m.baseline_tariffs;
    sched.tau(0, 1, 0) = 1.15;

    const SolveOutcome a = solve_counterfactual(m, sched);
    SolverOptions pin;
    pin.numeraire = SolverOptions::Numeraire::PinWage;
    pin.pinned_country = 2;
    const SolveOutcome b = solve_counterfactual(m, sched, pin);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t s = 0; s < 2; ++s) {
            CHECK(a.eq.y_sector(i, s) == doctest::Approx(b.eq.y_sector(i, s)).epsilon(1e-7));
            CHECK(a.eq.consumption(i, s) ==
                  doctest::Approx(b.eq.consumption(i, s)).epsilon(1e-7));
        }
    // nominal scale anchored differently, relative wages identical
    CHECK(a.eq.w[0] / a.eq.w[2] == doctest::Approx(b.eq.w[0] / b.eq.w[2]).epsilon(1e-7));
    CHECK(b.eq.w[2] == doctest::Approx(m.w0[2]).epsilon(1e-12));
}

TEST_CASE("market-clearing diagnostics are tight") {
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 2;
    spec.include_services = true;
    spec.include_io = true;
    const CalibratedModel m =
        calibrate(inject_bilateral_deficit(symmetric_world(spec), 0, 1, 5.0));
    TariffSchedule sched = m.baseline_tariffs;
    sched.tau(0, 1, 0) = 1.25;
    const SolveOutcome out = solve_counterfactual(m, sched);
    REQUIRE(out.ok());
    CHECK(out.eq.diagnostics.labor_residual < 1e-10);
    CHECK(out.eq.diagnostics.goods_residual < 1e-8);
    // transfers are held fixed across counterfactuals
    CHECK(out.eq.deficits_realized[0] == doctest::Approx(m.D[0]).epsilon(1e-8));
}

TEST_CASE("a small tariff benefits the chooser, a large one does not") {
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 1;
    const CalibratedModel m = calibrate(symmetric_world(spec));
    const SolveOutcome base = solve_counterfactual(m, m.baseline_tariffs);
    REQUIRE(base.ok());

    auto chooser_beta = [&](double tau) {
        TariffSchedule sched = m.baseline_tariffs;
        sched.tau(0, 1, 0) = tau;
        const SolveOutcome out = solve_counterfactual(m, sched);
        REQUIRE(out.ok());
        const WelfareReport rep = welfare(m, base.eq, out.eq);
        // partner always loses from the home tariff
        CHECK(rep.beta[1] < 1.0);
        return rep.beta[0];
    };
    CHECK(chooser_beta(1.05) > 1.0);   // terms-of-trade gain dominates
    CHECK(chooser_beta(3.0) < chooser_beta(1.2));  // deep in the prohibitive range
}

TEST_CASE("autarky removes trade and the gains from it") {
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 2;
    const CalibratedModel m = calibrate(symmetric_world(spec));
    const SolveOutcome trade = solve_counterfactual(m, m.baseline_tariffs);
    const SolveOutcome aut = autarky_equilibrium(m, 0, 1);
    REQUIRE(trade.ok());
    REQUIRE_MESSAGE(aut.ok(), aut.message);

    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(aut.eq.flows(0, 1, s) == 0.0);
        CHECK(aut.eq.flows(1, 0, s) == 0.0);
    }
    const std::vector<double> w_trade = welfare_levels(m, trade.eq);
    const std::vector<double> w_aut = welfare_levels(m, aut.eq);
    CHECK(w_aut[0] < w_trade[0]);
    CHECK(w_aut[1] < w_trade[1]);

    ScenarioSpec big = spec;
    big.n_countries = 3;
    const CalibratedModel m3 = calibrate(symmetric_world(big));
    CHECK_THROWS(autarky_model(m3, 0, 1));
}

TEST_CASE("numerical demand elasticity matches the structural one") {
    // Home-biased many-country world: the probed flow is small and the
    // exporter's wage is anchored by its other partners, so general-equilibrium
    // feedback barely moves the measurement and the CES exponent shows through.
    // (With few countries relative wages are nearly indeterminate and the wage
    // response swallows up to a third of the price shock.)
    const std::size_t J = 8;
    EconomyData data;
    for (std::size_t i = 0; i < J; ++i) data.countries.push_back("C" + std::to_string(i + 1));
    data.sectors = {{"g1", "good", 5.5, false}};
    data.flows = Array3(J, J, 1, 0.5);
    for (std::size_t i = 0; i < J; ++i) data.flows(i, i, 0) = 100.0 - 0.5 * (J - 1);
    data.io_usage = Array3(J, 1, 1, 0.0);
    data.tariffs = TariffSchedule::ones(J, 1);
    data.gdp.assign(J, 100.0);
    const CalibratedModel m = calibrate(data);

    const double zeta = numerical_elasticity(m, 0, 1, 0);
    CHECK(zeta < 0.0);
    CHECK(std::abs(std::abs(zeta) - 5.5) / 5.5 < 0.10);

    CalibratedModel no_trade = m;
    no_trade.gamma(0, 1, 0) = 0.0;
    CHECK_THROWS(numerical_elasticity(no_trade, 0, 1, 0));
}

TEST_CASE("failure reporting instead of exceptions for bad schedules") {
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 1;
    const CalibratedModel m = calibrate(symmetric_world(spec));
    const SolveOutcome out = solve_counterfactual(m, TariffSchedule::ones(3, 1));
    CHECK(!out.ok());
    CHECK(!out.message.empty());
}
