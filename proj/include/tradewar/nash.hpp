#pragma once

#include "tradewar/optimizer.hpp"

#include <array>
#include <functional>
#include <memory>

namespace tradewar {

// Builds a fitness engine for `chooser` against `partner`, with all other
// tariffs frozen at `current`. Lets the same game run on different models.
using EvaluatorFactory = std::function<std::unique_ptr<WelfareEvaluator>(
    std::size_t chooser, std::size_t partner, const TariffSchedule& current)>;

EvaluatorFactory armington_factory(const CalibratedModel& model,
                                   bool participation_constraint = false,
                                   SolverOptions solver_opts = {});

struct NashResult {
    Candidate tau_i, tau_j;
    double welfare_i = 0.0, welfare_j = 0.0;  // evaluator units, final round
    TariffSchedule schedule;                  // both best responses applied
    int rounds = 0;
    bool converged = false;
    bool multiplicity_suspected = false;
    std::vector<std::array<double, 2>> welfare_trace;  // (W_i, W_j) per round
};

struct NashOptions {
    double tol = 1e-4;       // sup-norm on tariffs and welfare change
    int max_rounds = 50;
    bool i_moves_first = true;
    bool multiplicity_check = false;  // re-run from jittered seeds and compare
};

// Alternating best responses from the baseline tariffs, each round seeded with
// the previous optimum.
NashResult nash(const CalibratedModel& model, std::size_t i, std::size_t j,
                const GAConfig& cfg, const EvaluatorFactory& factory,
                const NashOptions& opts = {});

struct DeviationGrid {
    double fine_max = 1.25;    // gross factor; 0..25% in fine steps
    double fine_step = 0.0025;
    double tail_step = 0.05;   // coarse sweep from fine_max to the cap
};

struct DeviationReport {
    double max_improvement = -1.0;
    std::size_t worst_chooser = 0;
    std::size_t worst_sector = 0;  // position in the taxable-sector vector
    double worst_tariff = 1.0;
    int cells_checked = 0;
    int failures = 0;

    bool pass(double tol = 1e-9) const { return failures == 0 && max_improvement <= tol; }
};

// Exhaustive single-sector deviation sweep for both players against the
// candidate equilibrium.
DeviationReport verify_no_deviation(const EvaluatorFactory& factory, const NashResult& nash_eq,
                                    std::size_t i, std::size_t j, const GAConfig& cfg,
                                    const DeviationGrid& grid = {});

}  // namespace tradewar
