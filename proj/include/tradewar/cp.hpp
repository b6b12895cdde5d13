#pragma once

#include "tradewar/optimizer.hpp"
#include "tradewar/solver.hpp"
#include "tradewar/types.hpp"

namespace tradewar {

// Ricardian variant solved in proportional changes (hats). Productivity
// location parameters never appear: they cancel in x' / x.
struct CPModel {
    std::vector<std::string> countries;
    std::vector<SectorInfo> sectors;  // elasticity field unused here

    Array3 pi;        // expenditure shares pi[i][n][s], sum_n = 1
    std::vector<double> theta;  // trade elasticity per sector, > 0
    Array2 gamma_l;   // labor value-added share gamma_l[i][s]
    Array3 gamma_io;  // input shares gamma_io[i][s][k]: input k in producing s
    Array2 alpha_c;   // final consumption shares
    Array2 X;         // baseline sectoral expenditures, tariff-inclusive
    std::vector<double> L;   // labor endowments (baseline wages = 1)
    std::vector<double> D;
    std::vector<double> I;   // baseline incomes
    TariffSchedule baseline_tariffs;
    double baseline_labor_income = 0.0;

    std::size_t country_count() const { return countries.size(); }
    std::size_t sector_count() const { return sectors.size(); }
};

// theta must be supplied explicitly: one value per sector.
CPModel calibrate_cp(const EconomyData& data, const std::vector<double>& theta);

struct HatEquilibrium {
    std::vector<double> hat_w;
    Array2 hat_c;
    Array2 hat_p;
    Array3 hat_pi;
    Array2 X_prime;
    std::vector<double> I_prime;
    std::vector<double> hat_W;  // income change deflated by the price index
    SolveDiagnostics diagnostics;
};

struct HatOutcome {
    SolveStatus status = SolveStatus::OuterFailure;
    HatEquilibrium eq;
    std::string message;
    bool ok() const { return status == SolveStatus::Converged; }
};

HatOutcome solve_hat(const CPModel& cp, const TariffSchedule& new_tariffs,
                     const SolverOptions& opts = {});

std::vector<double> welfare_hat(const CPModel& cp, const HatEquilibrium& eq);

// Drop-in fitness engine for the optimizer/Nash machinery: candidates score
// the chooser's welfare change relative to the CP baseline.
class CPEvaluator final : public WelfareEvaluator {
public:
    CPEvaluator(const CPModel& cp, std::size_t chooser, std::size_t partner,
                TariffSchedule base, SolverOptions solver_opts = {});

    std::size_t dimension() const override { return sectors_.size(); }
    std::optional<double> evaluate(const Candidate& tau) const override;
    TariffSchedule schedule_for(const Candidate& tau) const;

private:
    const CPModel& cp_;
    std::size_t chooser_, partner_;
    TariffSchedule base_;
    std::vector<std::size_t> sectors_;
    SolverOptions sopts_;
};

}  // namespace tradewar
