#include "tradewar/imbalance.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace tradewar {

void FlowPanel::add_flow(const std::string& importer, const std::string& exporter, int year,
                         double value) {
    if (value < 0.0) throw std::runtime_error("negative flow in panel");
    for (const auto& r : records)
        if (r.importer == importer && r.exporter == exporter && r.year == year)
            throw std::runtime_error("duplicate panel record (" + importer + "," + exporter + ")");
    records.push_back({importer, exporter, year, value});
}

double FlowPanel::flow(const std::string& importer, const std::string& exporter, int year) const {
    for (const auto& r : records)
        if (r.importer == importer && r.exporter == exporter && r.year == year) return r.value;
    return 0.0;
}

std::optional<double> bilateral_imbalance(double flow_ij, double flow_ji) {
    const double gross = flow_ij + flow_ji;
    if (gross <= 0.0) return std::nullopt;
    return std::abs(flow_ij - flow_ji) / gross;
}

double aggregate_imbalance(double net_exports_sum, double gdp) {
    if (gdp <= 0.0) throw std::runtime_error("aggregate imbalance requires positive GDP");
    return std::abs(net_exports_sum) / gdp;
}

double weighted_cross_section(const FlowPanel& panel, int year, ImbalanceMode mode) {
    // Contemporaneous GDP weights over destinations, renormalized over included
    // observations; zero-trade pairs are skipped (the index is undefined there).
    std::set<std::string> countries;
    for (const auto& r : panel.records)
        if (r.year == year) {
            countries.insert(r.importer);
            countries.insert(r.exporter);
        }

    double wsum = 0.0, acc = 0.0;
    if (mode == ImbalanceMode::Bilateral) {
        for (const auto& i : countries)
            for (const auto& j : countries) {
                if (i == j) continue;
                const auto idx = bilateral_imbalance(panel.flow(i, j, year), panel.flow(j, i, year));
                if (!idx) continue;
                const auto it = panel.gdp.find({i, year});
                if (it == panel.gdp.end())
                    throw std::runtime_error("missing GDP for " + i);
                acc += *idx * it->second;
                wsum += it->second;
            }
    } else {
        for (const auto& i : countries) {
            double net = 0.0;
            bool any = false;
            for (const auto& j : countries) {
                if (i == j) continue;
                const double in = panel.flow(i, j, year), out = panel.flow(j, i, year);
                if (in > 0.0 || out > 0.0) any = true;
                net += in - out;
            }
            if (!any) continue;
            const auto it = panel.gdp.find({i, year});
            if (it == panel.gdp.end()) throw std::runtime_error("missing GDP for " + i);
            acc += aggregate_imbalance(net, it->second) * it->second;
            wsum += it->second;
        }
    }
    if (wsum <= 0.0) throw std::runtime_error("no valid observations in year");
    return acc / wsum;
}

std::map<int, double> moving_average(const std::map<int, double>& series, int window) {
    if (window < 1) throw std::runtime_error("moving average window must be >= 1");
    std::map<int, double> out;
    for (const auto& [year, _] : series) {
        double acc = 0.0;
        int n = 0;
        for (int y = year - window + 1; y <= year; ++y) {
            const auto it = series.find(y);
            if (it != series.end()) {
                acc += it->second;
                ++n;
            }
        }
        if (n > 0) out[year] = acc / n;
    }
    return out;
}

}  // namespace tradewar
