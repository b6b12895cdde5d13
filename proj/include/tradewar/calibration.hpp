#pragma once

#include "tradewar/solver.hpp"
#include "tradewar/types.hpp"

#include <map>
#include <optional>
#include <string>

namespace tradewar {

struct CalibrationOptions {
    enum class Mode { PreferencesOnly, Iceberg };
    Mode mode = Mode::PreferencesOnly;
    double iceberg_lower = 1.0;
    double iceberg_upper = 100.0;
};

// Exact-fit calibration: the returned model's equilibrium at baseline tariffs
// and unit wages reproduces the input flows and IO usage.
CalibratedModel calibrate(const EconomyData& data, const CalibrationOptions& opts = {});

// Iceberg variant: trade costs absorb bilateral price asymmetries,
// t_ij = (1/tau_ij)(p_ii/p_jj)(E_ij/E_ii)^{1/(1-sigma)}, clamped to bounds.
CalibratedModel calibrate_iceberg(const EconomyData& data, const CalibrationOptions& opts = {});

// Scales every country's exports by a common factor until all aggregate
// deficits vanish (iterated until the worst deficit is ~0). If the world
// deficit sum is nonzero the residual mean is left in place and a warning
// message is returned.
struct RebalanceResult {
    EconomyData data;
    int passes = 0;
    std::string warning;  // empty when fully balanced
};
RebalanceResult rebalance_row_exports(const EconomyData& data);

// Solves the counterfactual under `tariffs` (optionally with new transfers)
// and re-fits a fresh model to the implied flows.
CalibratedModel rebaseline(const CalibratedModel& model, const TariffSchedule& tariffs,
                           const std::optional<std::vector<double>>& new_deficits = std::nullopt,
                           const CalibrationOptions& opts = {});

// Scales importer j's taste for origin i's goods (zeta) with a complementary
// rescaling of other origins so share sums are preserved, until the pair's
// counterfactual bilateral deficit is zero; the removed bilateral amount is
// moved out of both countries' aggregate transfers.
struct EliminationResult {
    CalibratedModel model;
    double zeta = 1.0;
    double bilateral_deficit_removed = 0.0;
};
EliminationResult eliminate_bilateral_deficit(const CalibratedModel& model, std::size_t i,
                                              std::size_t j);

// Sums sectors/regions into composites; tariffs combine as trade-weighted
// means of member factors (or simple means on request).
struct AggregationOptions {
    bool simple_average_tariffs = false;
    std::map<std::string, double> elasticity_override;  // new sector id -> sigma
};
EconomyData aggregate(const EconomyData& data,
                      const std::map<std::string, std::string>& sector_map,
                      const std::map<std::string, std::string>& region_map,
                      const AggregationOptions& opts = {});

// Reconstructs an observable dataset from a solved equilibrium.
EconomyData economy_from(const CalibratedModel& model, const Equilibrium& eq,
                         const TariffSchedule& tariffs);

}  // namespace tradewar
