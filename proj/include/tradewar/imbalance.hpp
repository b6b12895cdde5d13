#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tradewar {

// Panel of directed annual flows plus GDP series.
struct FlowPanel {
    struct Record {
        std::string importer;
        std::string exporter;
        int year;
        double value;
    };
    std::vector<Record> records;
    std::map<std::pair<std::string, int>, double> gdp;  // (country, year) -> GDP

    void add_flow(const std::string& importer, const std::string& exporter, int year, double value);
    double flow(const std::string& importer, const std::string& exporter, int year) const;  // 0 if absent
};

enum class ImbalanceMode { Bilateral, Aggregate };

// |flow_ij - flow_ji| / (flow_ij + flow_ji); nullopt when both flows are zero.
std::optional<double> bilateral_imbalance(double flow_ij, double flow_ji);

// |sum_j net exports| / GDP.
double aggregate_imbalance(double net_exports_sum, double gdp);

// GDP-weighted mean of per-pair or per-country indices for one year.
double weighted_cross_section(const FlowPanel& panel, int year, ImbalanceMode mode);

// Trailing moving average over available observations within the window.
std::map<int, double> moving_average(const std::map<int, double>& series, int window);

}  // namespace tradewar
