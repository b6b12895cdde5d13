// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. argv[1] must be the path to the CLI binary
// (used by the cross-thread determinism criterion).
#include "tradewar/calibration.hpp"
#include "tradewar/cp.hpp"
#include "tradewar/imbalance.hpp"
#include "tradewar/nash.hpp"
#include "tradewar/scenario.hpp"
#include "tradewar/solver.hpp"
#include "tradewar/toy.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace tradewar;
namespace fs = std::filesystem;

namespace {

struct Checker {
    bool ok = true;
    std::string first_failure;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            first_failure = what;
        }
    }
};

double max_rel_err(const Array3& got, const Array3& want) {
    double worst = 0.0;
    for (std::size_t k = 0; k < want.raw().size(); ++k)
        worst = std::max(worst, std::abs(got.raw()[k] - want.raw()[k]) /
                                    std::max(1.0, std::abs(want.raw()[k])));
    return worst;
}

double rel(double got, double want) {
    return std::abs(got - want) / std::max(1e-12, std::abs(want));
}

GAConfig quick_cfg() {
    GAConfig cfg;
    cfg.population = 40;
    cfg.elites = 4;
    cfg.crossover = 28;
    cfg.mutation = 8;
    cfg.upper = 1.6;
    cfg.stall_limit = 25;
    cfg.generation_limit = 300;
    cfg.hybrid_stall_limit = 8;
    cfg.hybrid_generation_limit = 80;
    cfg.outer_rounds = 4;
    return cfg;
}

// ---------------------------------------------------------------------------
// 1. baseline round-trip over randomized economies, both calibration modes
void criterion1(Checker& c) {
    for (int k = 0; k < 10; ++k) {
        std::mt19937 rng(1234u + static_cast<unsigned>(k));
        std::uniform_real_distribution<double> jitter(0.6, 1.4);
        std::uniform_real_distribution<double> rate(0.0, 0.25);

        ScenarioSpec spec;
        spec.n_countries = 2 + static_cast<std::size_t>(k % 3);
        spec.n_goods_sectors = 1 + static_cast<std::size_t>(k % 5);
        spec.include_services = (k % 2) == 1;
        spec.include_io = (k % 3) != 0;
        EconomyData data = symmetric_world(spec);
        const std::size_t J = data.country_count(), S = data.sector_count();
        for (double& f : data.flows.raw()) f *= jitter(rng);
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                double sales = 0.0;
                for (std::size_t i = 0; i < J; ++i) sales += data.flows(i, j, s);
                for (std::size_t k2 = 0; k2 < S; ++k2)
                    data.io_usage(j, s, k2) = spec.include_io
                                                  ? 0.5 * spec.io_intensity * sales /
                                                        static_cast<double>(S) * jitter(rng)
                                                  : 0.0;
            }
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t j = 0; j < J; ++j) {
                if (i == j) continue;
                for (std::size_t s : taxable_sectors(data))
                    data.tariffs.tau(i, j, s) = 1.0 + rate(rng);
            }
        c.expect(validate(data).clean(), "economy " + std::to_string(k) + " not clean");

        CalibrationOptions copts;
        copts.mode = (k % 2) == 0 ? CalibrationOptions::Mode::PreferencesOnly
                                  : CalibrationOptions::Mode::Iceberg;
        const CalibratedModel m = calibrate(data, copts);
        const SolveOutcome out = solve_counterfactual(m, m.baseline_tariffs);
        c.expect(out.ok(), "baseline solve failed: " + out.message);
        if (!out.ok()) continue;
        c.expect(max_rel_err(out.eq.flows, data.flows) < 1e-8,
                 "flow round-trip error too large on economy " + std::to_string(k));
        c.expect(max_rel_err(out.eq.io_usage, data.io_usage) < 1e-8,
                 "io round-trip error too large on economy " + std::to_string(k));
    }
}

// ---------------------------------------------------------------------------
// 2. 2-country single-sector equilibria match the endowment model on a grid
void criterion2(Checker& c) {
    const double sigma = 4.0;
    for (const double d : {0.0, 0.02, 0.05, 0.08, 0.12}) {
        ToyParams base;
        base.sigma1 = base.sigma2 = sigma;
        base.d = d;
        const ToyEquilibrium eq0 = solve_toy(base);

        EconomyData data;
        data.countries = {"C1", "C2"};
        data.sectors = {{"g1", "good", sigma, false}};
        data.flows = Array3(2, 2, 1, 0.0);
        data.flows(0, 0, 0) = eq0.c11;
        data.flows(0, 1, 0) = eq0.p * eq0.c21;
        data.flows(1, 0, 0) = eq0.c12;
        data.flows(1, 1, 0) = eq0.p * eq0.c22;
        data.io_usage = Array3(2, 1, 1, 0.0);
        data.tariffs = TariffSchedule::ones(2, 1);
        data.gdp = {eq0.c11 + eq0.p * eq0.c21, eq0.c12 + eq0.p * eq0.c22};
        const CalibratedModel m = calibrate(data);

        SolverOptions so;
        so.numeraire = SolverOptions::Numeraire::PinWage;
        so.pinned_country = 0;  // good-1 units, matching the transfer

        const double e = (sigma - 1.0) / sigma;
        auto composite = [&](std::size_t i, double y_home, double y_cross) {
            return std::pow(m.gamma(i, 0, 0) * std::pow(i == 0 ? y_home : y_cross, e) +
                                m.gamma(i, 1, 0) * std::pow(i == 0 ? y_cross : y_home, e),
                            1.0 / e);
        };

        for (const double tau1 : {0.0, 0.05, 0.1, 0.2, 0.3}) {
            ToyParams cf = base;
            cf.tau1 = tau1;
            const ToyEquilibrium oracle = solve_toy(cf);

            TariffSchedule sched = m.baseline_tariffs;
            sched.tau(0, 1, 0) = 1.0 + tau1;
            const SolveOutcome out = solve_counterfactual(m, sched, so);
            c.expect(out.ok(), "solve failed: " + out.message);
            if (!out.ok()) return;

            c.expect(rel(out.eq.y_bilateral(0, 0, 0), oracle.c11) < 1e-8, "c11 mismatch");
            c.expect(rel(out.eq.y_bilateral(0, 1, 0), oracle.c21) < 1e-8, "c21 mismatch");
            c.expect(rel(out.eq.y_bilateral(1, 0, 0), oracle.c12) < 1e-8, "c12 mismatch");
            c.expect(rel(out.eq.y_bilateral(1, 1, 0), oracle.c22) < 1e-8, "c22 mismatch");
            c.expect(rel(out.eq.w[1] / out.eq.w[0], oracle.p) < 1e-8, "price mismatch");
            c.expect(std::abs(out.eq.tariff_revenue[0] - oracle.T1) < 1e-8, "revenue mismatch");

            const std::vector<double> W = welfare_levels(m, out.eq);
            c.expect(rel(W[0], composite(0, oracle.c11, oracle.c21)) < 1e-8, "W1 mismatch");
            c.expect(rel(W[1], composite(1, oracle.c22, oracle.c12)) < 1e-8, "W2 mismatch");
        }
    }
}

// ---------------------------------------------------------------------------
// 3. grid-searched optimum satisfies the textbook inverse-elasticity formula
void criterion3(Checker& c) {
    for (const double sigma2 : {1.5, 2.0, 4.0}) {
        ToyParams pr;
        pr.sigma1 = 2.0;
        pr.sigma2 = sigma2;
        const ToyGridResult opt = optimal_tariff_grid(pr, 0.0, 6.0, 1e-4);
        pr.tau1 = opt.tau_star;
        const ToyEquilibrium eq = solve_toy(pr);
        const double formula = 1.0 / (eq.lambda2 * (sigma2 - 1.0));
        c.expect(std::abs(opt.tau_star - formula) < 1e-3,
                 "formula gap at sigma2=" + std::to_string(sigma2));
    }
}

// ---------------------------------------------------------------------------
// 4. genetic search agrees with exhaustive grids across seeds
void criterion4(Checker& c) {
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 1;
    spec.elasticity = 7.5;  // interior optimum inside the [1, 1.6] cap
    const CalibratedModel m1 = calibrate(symmetric_world(spec));
    spec.n_goods_sectors = 2;
    const CalibratedModel m2 = calibrate(symmetric_world(spec));

    const ArmingtonEvaluator single(m1, 0, 1, m1.baseline_tariffs);
    const ArmingtonEvaluator multi(m2, 0, 1, m2.baseline_tariffs);
    const UniformEvaluator uniform(multi);

    auto grid_opt = [](const WelfareEvaluator& ev) {
        double bt = 1.0, bw = -1e300;
        for (double t = 1.0; t <= 1.6 + 1e-12; t += 1e-4) {
            const auto w = ev.evaluate(Candidate(ev.dimension(), t));
            if (w && *w > bw) {
                bw = *w;
                bt = t;
            }
        }
        return std::pair<double, double>{bt, bw};
    };
    const auto [gt1, gw1] = grid_opt(single);
    const auto [gt2, gw2] = grid_opt(uniform);
    c.expect(gt1 > 1.01 && gt1 < 1.59, "single-sector grid optimum not interior");

    for (const std::uint64_t seed : {20240501ull, 7ull, 99ull}) {
        GAConfig cfg = quick_cfg();
        cfg.rng_seed = seed;
        const BestResponse a = optimize(single, cfg);
        c.expect(std::abs(a.tau[0] - gt1) <= 1e-4 + 1e-12,
                 "single-sector tariff off grid optimum, seed " + std::to_string(seed));
        c.expect(std::abs(a.welfare - gw1) < 1e-9,
                 "single-sector welfare off grid optimum, seed " + std::to_string(seed));

        const BestResponse b = optimize(uniform, cfg);
        c.expect(std::abs(b.tau[0] - gt2) <= 1e-4 + 1e-12,
                 "uniform tariff off grid optimum, seed " + std::to_string(seed));
        c.expect(std::abs(b.welfare - gw2) < 1e-9,
                 "uniform welfare off grid optimum, seed " + std::to_string(seed));
    }
}

// ---------------------------------------------------------------------------
// 5. exhaustive deviation sweep certifies the Nash point, rejects a perturbed one
void criterion5(Checker& c) {
    ScenarioSpec spec;
    spec.n_countries = 3;
    spec.n_goods_sectors = 3;
    spec.elasticity = 7.5;
    const CalibratedModel m = calibrate(symmetric_world(spec));
    const GAConfig cfg = quick_cfg();
    const EvaluatorFactory factory = armington_factory(m);

    const NashResult res = nash(m, 0, 1, cfg, factory);
    c.expect(res.converged, "nash did not converge");
    if (!res.converged) return;

    DeviationGrid grid;  // 0..25% step 0.25%, then coarse to the cap
    grid.fine_max = 1.25;
    grid.fine_step = 0.0025;
    grid.tail_step = 0.05;
    const DeviationReport rep = verify_no_deviation(factory, res, 0, 1, cfg, grid);
    c.expect(rep.failures == 0, "deviation sweep had solver failures");
    c.expect(rep.pass(1e-9), "improving deviation found at a certified equilibrium");

    NashResult fake = res;
    fake.tau_i[0] = quantize(fake.tau_i[0] + 0.02, cfg);
    fake.schedule.tau(0, 1, 0) = fake.tau_i[0];
    const DeviationReport bad = verify_no_deviation(factory, fake, 0, 1, cfg, grid);
    c.expect(!bad.pass(1e-9), "perturbed candidate slipped through the sweep");
}

// ---------------------------------------------------------------------------
// 6. comparative statics in the injected deficit
void criterion6(Checker& c) {
    const GAConfig cfg = quick_cfg();
    ScenarioSpec spec;
    spec.n_countries = 2;
    spec.n_goods_sectors = 1;
    spec.elasticity = 7.5;

    auto monotone_up = [&](const std::vector<double>& v, const std::string& what) {
        for (std::size_t k = 1; k < v.size(); ++k)
            c.expect(v[k] >= v[k - 1] - 1e-6, what + " decreased along the deficit grid");
    };

    // unilateral and Nash tariffs, and flat-tariff welfare, rise with the deficit
    const std::vector<double> d7{0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0};
    std::vector<double> tau_uni, tau_nash, beta_flat_uni, beta_flat_ret;
    for (const double d : d7) {
        const EconomyData data =
            d == 0.0 ? symmetric_world(spec)
                     : inject_bilateral_deficit(symmetric_world(spec), 0, 1, d);
        const CalibratedModel m = calibrate(data);
        tau_uni.push_back(best_response(m, 0, 1, m.baseline_tariffs, cfg).tau[0]);
        const NashResult nr = nash(m, 0, 1, cfg, armington_factory(m));
        c.expect(nr.converged, "nash did not converge at d=" + std::to_string(d));
        tau_nash.push_back(nr.tau_i[0]);

        const SolveOutcome base = solve_counterfactual(m, m.baseline_tariffs);
        TariffSchedule uni = m.baseline_tariffs;
        uni.tau(0, 1, 0) = 1.10;
        TariffSchedule ret = uni;
        ret.tau(1, 0, 0) = 1.10;
        const SolveOutcome o1 = solve_counterfactual(m, uni);
        const SolveOutcome o2 = solve_counterfactual(m, ret);
        c.expect(base.ok() && o1.ok() && o2.ok(), "flat-tariff solve failed");
        beta_flat_uni.push_back(welfare(m, base.eq, o1.eq).beta[0]);
        beta_flat_ret.push_back(welfare(m, base.eq, o2.eq).beta[0]);
    }
    monotone_up(tau_uni, "unilateral tariff");
    monotone_up(tau_nash, "nash tariff");
    monotone_up(beta_flat_uni, "flat-tariff welfare (unilateral)");
    monotone_up(beta_flat_ret, "flat-tariff welfare (retaliation)");

    // participation constraint: identical while slack, then a drop at large d
    const std::vector<double> dp{0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
    std::vector<double> tau_con;
    for (const double d : dp) {
        const EconomyData data =
            d == 0.0 ? symmetric_world(spec)
                     : inject_bilateral_deficit(symmetric_world(spec), 0, 1, d);
        const CalibratedModel m = calibrate(data);
        tau_con.push_back(
            best_response(m, 0, 1, m.baseline_tariffs, cfg, {}, true).tau[0]);
        if (d <= 4.0) {
            const double unc = best_response(m, 0, 1, m.baseline_tariffs, cfg).tau[0];
            c.expect(std::abs(tau_con.back() - unc) <= 1e-4 + 1e-12,
                     "slack constraint changed the optimum at d=" + std::to_string(d));
        }
    }
    for (std::size_t k = 1; k < 5; ++k)  // rising while slack
        c.expect(tau_con[k] >= tau_con[k - 1] - 1e-6, "constrained tariff fell while slack");
    c.expect(tau_con[6] < tau_con[4] - 1e-3, "no participation drop at large d");

    // 3-country balanced design: chooser tariff rises, partner tariff falls
    ScenarioSpec s3;
    s3.n_countries = 3;
    s3.n_goods_sectors = 1;
    s3.elasticity = 7.5;
    std::vector<double> ti, tj;
    for (const double d : d7) {
        const EconomyData data =
            d == 0.0 ? symmetric_world(s3)
                     : inject_bilateral_deficit(symmetric_world(s3), 0, 1, d,
                                                DeficitMode::ThreeCountryBalanced, 2);
        const CalibratedModel m = calibrate(data);
        const NashResult nr = nash(m, 0, 1, cfg, armington_factory(m));
        c.expect(nr.converged, "3-country nash did not converge at d=" + std::to_string(d));
        ti.push_back(nr.tau_i[0]);
        tj.push_back(nr.tau_j[0]);
    }
    monotone_up(ti, "3-country chooser nash tariff");
    for (std::size_t k = 1; k < tj.size(); ++k)
        c.expect(tj[k] <= tj[k - 1] + 1e-6, "partner nash tariff increased along the grid");
}

// ---------------------------------------------------------------------------
// 7. removing the bilateral deficit lowers the chooser's gain at Nash
void criterion7(Checker& c) {
    // Three countries: with only two, the pair deficit is pinned by the
    // transfer and taste shifts cannot move it.
    ScenarioSpec spec;
    spec.n_countries = 3;
    spec.n_goods_sectors = 1;
    spec.elasticity = 7.5;
    const CalibratedModel m =
        calibrate(inject_bilateral_deficit(symmetric_world(spec), 0, 1, 8.0));
    const GAConfig cfg = quick_cfg();

    auto nash_beta = [&](const CalibratedModel& model) {
        const NashResult nr = nash(model, 0, 1, cfg, armington_factory(model));
        c.expect(nr.converged, "nash did not converge");
        const SolveOutcome base = solve_counterfactual(model, model.baseline_tariffs);
        const SolveOutcome at = solve_counterfactual(model, nr.schedule);
        c.expect(base.ok() && at.ok(), "solve failed in nash comparison");
        return welfare(model, base.eq, at.eq).beta[0];
    };

    const double with_deficit = nash_beta(m);
    const EliminationResult elim = eliminate_bilateral_deficit(m, 0, 1);
    c.expect(std::abs(elim.bilateral_deficit_removed - 8.0) < 1e-6,
             "elimination removed the wrong amount");
    const double without_deficit = nash_beta(elim.model);
    c.expect(without_deficit < with_deficit, "nash gain did not fall without the deficit");
}

// ---------------------------------------------------------------------------
// 8. hat-algebra engine: identity, levels oracle, qualitative ordering
void criterion8(Checker& c) {
    // identity counterfactual
    ScenarioSpec spec;
    spec.n_countries = 3;
    spec.n_goods_sectors = 2;
    spec.include_services = true;
    spec.include_io = true;
    const EconomyData rich = inject_bilateral_deficit(symmetric_world(spec), 0, 1, 6.0);
    const CPModel cp_rich = calibrate_cp(rich, {4.0, 3.0, 5.0});
    const HatOutcome id = solve_hat(cp_rich, cp_rich.baseline_tariffs);
    c.expect(id.ok(), "identity hat solve failed");
    if (id.ok()) {
        double worst = 0.0;
        for (double v : id.eq.hat_w) worst = std::max(worst, std::abs(v - 1.0));
        for (double v : id.eq.hat_p.raw()) worst = std::max(worst, std::abs(v - 1.0));
        for (double v : welfare_hat(cp_rich, id.eq)) worst = std::max(worst, std::abs(v - 1.0));
        c.expect(worst < 1e-10, "identity hats deviate from one");
    }

    // levels-vs-hats oracle: one sector, no intermediates, sigma = theta + 1
    ScenarioSpec tiny;
    tiny.n_countries = 2;
    tiny.n_goods_sectors = 1;
    tiny.elasticity = 5.0;
    const EconomyData data = inject_bilateral_deficit(symmetric_world(tiny), 0, 1, 4.0);
    const CPModel cp = calibrate_cp(data, {tiny.elasticity - 1.0});
    const CalibratedModel m = calibrate(data);
    TariffSchedule sched = cp.baseline_tariffs;
    sched.tau(0, 1, 0) = 1.15;
    const HatOutcome hat = solve_hat(cp, sched);
    const SolveOutcome base = solve_counterfactual(m, m.baseline_tariffs);
    const SolveOutcome cf = solve_counterfactual(m, sched);
    c.expect(hat.ok() && base.ok() && cf.ok(), "oracle solves failed");
    if (hat.ok() && base.ok() && cf.ok()) {
        const std::vector<double> W = welfare_hat(cp, hat.eq);
        const std::vector<double> wb = welfare_levels(m, base.eq);
        const std::vector<double> wc = welfare_levels(m, cf.eq);
        for (std::size_t i = 0; i < 2; ++i) {
            c.expect(rel(hat.eq.hat_w[i], cf.eq.w[i] / base.eq.w[i]) < 1e-8,
                     "hat wage disagrees with levels");
            c.expect(rel(W[i], wc[i] / wb[i]) < 1e-8, "hat welfare disagrees with levels");
        }
    }

    // qualitative ordering at the hat-engine Nash: deficit country fares better
    ScenarioSpec game;
    game.n_countries = 2;
    game.n_goods_sectors = 1;
    game.elasticity = 7.5;
    const EconomyData gdata = inject_bilateral_deficit(symmetric_world(game), 0, 1, 8.0);
    const CPModel gcp = calibrate_cp(gdata, {game.elasticity - 1.0});
    const CalibratedModel gm = calibrate(gdata);
    const EvaluatorFactory factory = [&gcp](std::size_t chooser, std::size_t partner,
                                            const TariffSchedule& current) {
        return std::unique_ptr<WelfareEvaluator>(
            std::make_unique<CPEvaluator>(gcp, chooser, partner, current));
    };
    const NashResult nr = nash(gm, 0, 1, quick_cfg(), factory);
    c.expect(nr.converged, "cp nash did not converge");
    c.expect(nr.welfare_i > nr.welfare_j, "deficit country did not fare better at cp nash");
}

// ---------------------------------------------------------------------------
// 9. imbalance indices: exact hand values plus scale invariance
void criterion9(Checker& c) {
    c.expect(*bilateral_imbalance(4.0, 4.0) == 0.0, "balanced pair index not 0");
    c.expect(*bilateral_imbalance(10.0, 0.0) == 1.0, "one-way pair index not 1");
    c.expect(std::abs(*bilateral_imbalance(30.0, 10.0) - 0.5) < 1e-15, "0.5 case wrong");
    c.expect(!bilateral_imbalance(0.0, 0.0).has_value(), "zero pair should be undefined");

    FlowPanel panel;
    panel.add_flow("A", "B", 2001, 6.0);  // index 0.2, weight 3
    panel.add_flow("B", "A", 2001, 4.0);
    panel.add_flow("C", "D", 2001, 8.0);  // index 0.6, weight 1
    panel.add_flow("D", "C", 2001, 2.0);
    panel.gdp[{"A", 2001}] = 3.0;
    panel.gdp[{"B", 2001}] = 3.0;
    panel.gdp[{"C", 2001}] = 1.0;
    panel.gdp[{"D", 2001}] = 1.0;
    c.expect(std::abs(weighted_cross_section(panel, 2001, ImbalanceMode::Bilateral) - 0.3) <
                 1e-12,
             "weighted cross-section 0.3 case wrong");

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> flow(0.01, 100.0), scale(0.1, 1000.0);
    for (int k = 0; k < 1000; ++k) {
        const double a = flow(rng), b = flow(rng), s = scale(rng);
        const double base = *bilateral_imbalance(a, b);
        c.expect(base >= 0.0 && base <= 1.0, "index out of range");
        c.expect(std::abs(*bilateral_imbalance(s * a, s * b) - base) < 1e-12,
                 "index not scale invariant");
        c.expect(std::abs(*bilateral_imbalance(b, a) - base) < 1e-15, "index not symmetric");
    }
}

// ---------------------------------------------------------------------------
// 10. CLI nash output is byte-identical across worker counts
void criterion10(Checker& c, const std::string& cli) {
    const fs::path dir =
        fs::temp_directory_path() / ("tw_acc10_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string q = "\"" + cli + "\"";
    auto run = [&](const std::string& args) {
        const std::string cmd = q + " " + args + " >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };

    const std::string bundle = (dir / "bundle").string();
    const std::string model = (dir / "model.json").string();
    c.expect(run("scenario --countries 2 --sectors 1 --elasticity 7.5 --deficit 4 --out \"" +
                 bundle + "\""),
             "scenario command failed");
    c.expect(run("calibrate --in \"" + bundle + "\" --out \"" + model + "\""),
             "calibrate command failed");

    std::ofstream(dir / "ga.cfg") << "population = 40\nelites = 4\ncrossover = 28\n"
                                     "mutation = 8\nupper = 1.6\nstall_limit = 25\n"
                                     "generation_limit = 300\nhybrid_stall_limit = 8\n"
                                     "hybrid_generation_limit = 80\nouter_rounds = 4\n";

    std::vector<std::string> outputs;
    for (const int threads : {1, 4, 8}) {
        const std::string out = (dir / ("nash" + std::to_string(threads) + ".json")).string();
        c.expect(run("nash --model \"" + model + "\" --i C1 --j C2 --config \"" +
                     (dir / "ga.cfg").string() + "\" --threads " + std::to_string(threads) +
                     " --out \"" + out + "\""),
                 "nash command failed with --threads " + std::to_string(threads));
        std::ifstream in(out, std::ios::binary);
        std::ostringstream body;
        body << in.rdbuf();
        outputs.push_back(body.str());
    }
    c.expect(!outputs.empty() && !outputs[0].empty(), "nash output missing");
    for (std::size_t k = 1; k < outputs.size(); ++k)
        c.expect(outputs[k] == outputs[0], "nash outputs differ across worker counts");
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// 11. probed demand elasticity recovers the substitution elasticity
void criterion11(Checker& c) {
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
    c.expect(zeta < 0.0, "elasticity not negative");
    c.expect(std::abs(std::abs(zeta) - 5.5) / 5.5 < 0.10, "elasticity off by more than 10%");
}

int run(int n, const std::string& label, const std::function<void(Checker&)>& fn) {
    Checker c;
    try {
        fn(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    if (c.ok)
        std::printf("PASS criterion %d %s\n", n, label.c_str());
    else
        std::printf("FAIL criterion %d %s: %s\n", n, label.c_str(), c.first_failure.c_str());
    std::fflush(stdout);
    return c.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <cli-binary>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];

    int failures = 0;
    failures += run(1, "calibration round-trip", criterion1);
    failures += run(2, "endowment-model oracle equivalence", criterion2);
    failures += run(3, "textbook optimal-tariff formula", criterion3);
    failures += run(4, "search matches exhaustive grids", criterion4);
    failures += run(5, "nash no-deviation sweep", criterion5);
    failures += run(6, "deficit comparative statics", criterion6);
    failures += run(7, "deficit elimination lowers nash gain", criterion7);
    failures += run(8, "hat-algebra identity and oracle", criterion8);
    failures += run(9, "imbalance indices", criterion9);
    failures += run(10, "cross-thread determinism of the cli",
                    [&cli](Checker& c) { criterion10(c, cli); });
    failures += run(11, "numerical elasticity recovery", criterion11);

    return failures == 0 ? 0 : 1;
}
