#pragma once

#include "tradewar/cp.hpp"
#include "tradewar/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tradewar {

// CSV bundle layout (fixed headers):
//   flows.csv    importer,exporter,sector,value        net-of-tariff values
//   io.csv       country,using_sector,input_sector,value
//   tariffs.csv  importer,exporter,sector,rate_percent
//   sectors.csv  id,name,elasticity,is_service
//   gdp.csv      country,value
struct EconomyPaths {
    std::filesystem::path flows, io, tariffs, sectors, gdp;

    static EconomyPaths in_dir(const std::filesystem::path& dir) {
        return {dir / "flows.csv", dir / "io.csv", dir / "tariffs.csv", dir / "sectors.csv",
                dir / "gdp.csv"};
    }
};

struct LoadResult {
    EconomyData data;
    std::vector<std::string> warnings;  // e.g. missing tariff cells defaulting to 0%
};

LoadResult load_economy(const EconomyPaths& paths);
void save_economy(const EconomyData& data, const EconomyPaths& paths);

// JSON round-trips are bit-exact: numbers serialized at 17 significant digits.
void save_model(const CalibratedModel& model, const std::filesystem::path& file);
CalibratedModel load_model(const std::filesystem::path& file);
void save_cp_model(const CPModel& cp, const std::filesystem::path& file);
CPModel load_cp_model(const std::filesystem::path& file);
void save_equilibrium(const Equilibrium& eq, const std::filesystem::path& file);

// Standalone tariff file in the bundle's tariffs.csv format, resolved against
// an existing country/sector layout. Missing cross-border goods cells keep 0%.
TariffSchedule load_tariff_csv(const std::filesystem::path& file,
                               const std::vector<std::string>& countries,
                               const std::vector<SectorInfo>& sectors,
                               std::vector<std::string>* warnings = nullptr);
void save_tariff_csv(const TariffSchedule& tariffs, const std::vector<std::string>& countries,
                     const std::vector<SectorInfo>& sectors, const std::filesystem::path& file);

// Report table: per-sector tariff rates (percent) with their trade-weighted
// average (baseline-trade weights) and welfare changes.
std::string emit_table(const std::vector<SectorInfo>& sectors,
                       const std::vector<double>& tau_factors,
                       const std::vector<double>& baseline_trade, double delta_w_pct);

// Shared helper for the weighted average row.
double trade_weighted_rate(const std::vector<double>& tau_factors,
                           const std::vector<double>& weights);

}  // namespace tradewar
