#pragma once

#include "tradewar/types.hpp"

namespace tradewar {

// Controlled synthetic worlds: per-country expenditure of `expenditure_base`
// split equally across every origin (including self) and every sector.
struct ScenarioSpec {
    std::size_t n_countries = 2;
    std::size_t n_goods_sectors = 1;
    bool include_services = false;   // appends one untaxable sector
    bool include_io = false;
    double expenditure_base = 100.0;
    double elasticity = 5.5;
    double io_intensity = 0.3;  // share of gross output spent on intermediates
};

EconomyData symmetric_world(const ScenarioSpec& spec);

enum class DeficitMode {
    TwoCountry,           // shift the (i,j) pair only; i's aggregate deficit becomes d
    ThreeCountryBalanced  // offset both countries through a third so aggregates stay 0
};

// Country i runs a bilateral deficit of d against j, spread equally over goods
// sectors. Balanced mode routes the offsets through `third`.
EconomyData inject_bilateral_deficit(EconomyData data, std::size_t i, std::size_t j, double d,
                                     DeficitMode mode = DeficitMode::TwoCountry,
                                     std::size_t third = 2);

// One-directional adjustment of i's trade with k: adds amount/2 to i's imports
// from k and removes amount/2 from i's exports to k.
EconomyData inject_aggregate_offset(EconomyData data, std::size_t i, std::size_t k, double amount);

}  // namespace tradewar
