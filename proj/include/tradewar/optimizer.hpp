#pragma once

#include "tradewar/solver.hpp"
#include "tradewar/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace tradewar {

// Per-taxable-sector gross tariff factors, discretized to 4 decimals.
using Candidate = std::vector<double>;

struct GAConfig {
    int population = 160;
    int elites = 16;
    int crossover = 116;
    int mutation = 28;
    double laplace_b = 0.35;
    double power_top = 10.0;     // mutation power for above-median parents
    double power_bottom = 4.0;   // and for below-median parents
    double direction_clamp_lo = 0.25;
    double direction_clamp_hi = 0.75;
    double lower = 1.0;
    double upper = 5.0;          // tariff cap (gross factor)
    double quantum = 1e-4;
    double stall_tol = 1e-4;
    int stall_limit = 50;
    int generation_limit = 1000;
    int hybrid_stall_limit = 10;
    int hybrid_generation_limit = 200;
    double outer_tol = 1e-4;
    int outer_rounds = 10;
    std::uint64_t rng_seed = 20240501;
    int threads = 0;  // 0 = hardware concurrency; results never depend on it

    void check() const;  // throws on inconsistent settings
};

// Engine-agnostic fitness: maps a candidate to the chooser's welfare.
// nullopt marks a failed equilibrium solve (worst possible fitness).
class WelfareEvaluator {
public:
    virtual ~WelfareEvaluator() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::optional<double> evaluate(const Candidate& tau) const = 0;
};

// Applies the candidate to the chooser's imports from the partner and solves
// the full model. With the participation constraint enabled, candidates that
// push the partner below its autarky welfare earn the chooser only its own
// autarky welfare.
class ArmingtonEvaluator final : public WelfareEvaluator {
public:
    ArmingtonEvaluator(const CalibratedModel& model, std::size_t chooser, std::size_t partner,
                       TariffSchedule base, bool participation_constraint = false,
                       SolverOptions solver_opts = {});

    std::size_t dimension() const override { return sectors_.size(); }
    std::optional<double> evaluate(const Candidate& tau) const override;

    TariffSchedule schedule_for(const Candidate& tau) const;
    const std::vector<std::size_t>& sector_indices() const { return sectors_; }
    double chooser_autarky_welfare() const { return autarky_chooser_; }

private:
    const CalibratedModel& model_;
    std::size_t chooser_, partner_;
    TariffSchedule base_;
    std::vector<std::size_t> sectors_;
    bool participation_;
    SolverOptions sopts_;
    double autarky_chooser_ = 0.0;
    double autarky_partner_ = 0.0;
};

// Collapses the search to one shared rate across all taxable sectors.
class UniformEvaluator final : public WelfareEvaluator {
public:
    explicit UniformEvaluator(const WelfareEvaluator& inner) : inner_(inner) {}
    std::size_t dimension() const override { return 1; }
    std::optional<double> evaluate(const Candidate& tau) const override {
        return inner_.evaluate(Candidate(inner_.dimension(), tau.at(0)));
    }

private:
    const WelfareEvaluator& inner_;
};

struct TraceRow {
    int generation = 0;
    double best_welfare = 0.0;
    double stall_metric = 0.0;
    int stall_counter = 0;
};

struct BestResponse {
    Candidate tau;
    double welfare = 0.0;
    int generations = 0;
    int failed_evaluations = 0;
    std::vector<TraceRow> trace;
};

// Hybrid genetic search: ranked roulette selection, Laplace crossover,
// adaptive power mutation, elitism, then lattice pattern-search refinement of
// the elites with GA re-seeding until the outer fixed point settles.
BestResponse optimize(const WelfareEvaluator& eval, const GAConfig& cfg,
                      const std::vector<Candidate>& seeds = {});

// Convenience wrappers over optimize().
BestResponse best_response(const CalibratedModel& model, std::size_t chooser, std::size_t partner,
                           const TariffSchedule& base, const GAConfig& cfg,
                           const std::vector<Candidate>& seeds = {},
                           bool participation_constraint = false);
BestResponse uniform_best_response(const CalibratedModel& model, std::size_t chooser,
                                   std::size_t partner, const TariffSchedule& base,
                                   const GAConfig& cfg);

// Building blocks, exposed for direct verification.
double laplace_draw(double u, double b);  // inverse CDF at u in (-0.5, 0.5)
Candidate laplace_crossover(const Candidate& p1, const Candidate& p2,
                            const std::vector<double>& lambdas, const GAConfig& cfg);
Candidate power_mutation(const Candidate& parent, bool above_median,
                         const std::vector<double>& u_step, const std::vector<double>& u_dir,
                         const GAConfig& cfg);
// Step-weighted geometric mean of best-welfare improvements, newest first.
double stall_metric(const std::vector<double>& best_history);
double quantize(double x, const GAConfig& cfg);

}  // namespace tradewar
