#pragma once

#include "tradewar/types.hpp"

namespace tradewar {

enum class SolveStatus { Converged, InnerFailure, OuterFailure };

struct SolverOptions {
    double tol_outer = 1e-10;   // labor-market residual, relative to L
    double tol_inner = 1e-12;   // sector-price fixed point, relative change
    int max_outer = 400;
    int max_inner = 10000;
    double damping = 0.5;

    // The model only pins relative prices; nominal levels need an anchor.
    // LaborIncomeSum holds sum_i w_i L_i at `target` (default: baseline value).
    // PinWage holds w[pinned_country] at `target` (default: its baseline wage).
    // Deficits are nominal transfers and scale with the chosen anchor.
    enum class Numeraire { LaborIncomeSum, PinWage };
    Numeraire numeraire = Numeraire::LaborIncomeSum;
    std::size_t pinned_country = 0;
    double target = 0.0;  // 0 means "baseline"

    std::vector<double> deficit_override;  // baseline-numeraire units; empty = model.D
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::OuterFailure;
    Equilibrium eq;
    std::string message;

    bool ok() const { return status == SolveStatus::Converged; }
};

SolveOutcome solve_counterfactual(const CalibratedModel& model, const TariffSchedule& tariffs,
                                  const SolverOptions& opts = {});

// Cobb-Douglas welfare levels W_i = prod_s c^a.
std::vector<double> welfare_levels(const CalibratedModel& model, const Equilibrium& eq);

// beta_i = prod_s (c'/c)^a; delta_pct = 100 (beta - 1).
WelfareReport welfare(const CalibratedModel& model, const Equilibrium& reference,
                      const Equilibrium& counterfactual);

// 2-country surgery: cross-pair taste shares zeroed, pair transfers removed.
CalibratedModel autarky_model(const CalibratedModel& model, std::size_t country,
                              std::size_t partner);
SolveOutcome autarky_equilibrium(const CalibratedModel& model, std::size_t country,
                                 std::size_t partner, const SolverOptions& opts = {});

// General-equilibrium demand elasticity: perturb t[i][j][s] by +1e-4, re-solve,
// return dlog y / dlog p for that cell (negative under CES demand).
double numerical_elasticity(const CalibratedModel& model, std::size_t importer,
                            std::size_t exporter, std::size_t sector,
                            const SolverOptions& opts = {});

}  // namespace tradewar
