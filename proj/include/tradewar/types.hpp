#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tradewar {

// Dense 2-d array of doubles, row-major.
class Array2 {
public:
    Array2() = default;
    Array2(std::size_t n1, std::size_t n2, double fill = 0.0)
        : n1_(n1), n2_(n2), data_(n1 * n2, fill) {}

    double& operator()(std::size_t a, std::size_t b) { return data_[a * n2_ + b]; }
    double operator()(std::size_t a, std::size_t b) const { return data_[a * n2_ + b]; }

    std::size_t dim1() const { return n1_; }
    std::size_t dim2() const { return n2_; }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

private:
    std::size_t n1_ = 0, n2_ = 0;
    std::vector<double> data_;
};

// Dense 3-d array of doubles. Index round-trip (a,b,c) <-> linear is the identity.
class Array3 {
public:
    Array3() = default;
    Array3(std::size_t n1, std::size_t n2, std::size_t n3, double fill = 0.0)
        : n1_(n1), n2_(n2), n3_(n3), data_(n1 * n2 * n3, fill) {}

    std::size_t flat(std::size_t a, std::size_t b, std::size_t c) const {
        return (a * n2_ + b) * n3_ + c;
    }
    double& operator()(std::size_t a, std::size_t b, std::size_t c) { return data_[flat(a, b, c)]; }
    double operator()(std::size_t a, std::size_t b, std::size_t c) const { return data_[flat(a, b, c)]; }

    std::size_t dim1() const { return n1_; }
    std::size_t dim2() const { return n2_; }
    std::size_t dim3() const { return n3_; }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

private:
    std::size_t n1_ = 0, n2_ = 0, n3_ = 0;
    std::vector<double> data_;
};

struct SectorInfo {
    std::string id;
    std::string name;
    double elasticity = 0.0;  // sigma, must exceed 1
    bool is_service = false;
};

// Gross ad-valorem tariff factors tau[importer][exporter][sector], tau >= 1,
// tau == 1 on the diagonal and for service sectors.
struct TariffSchedule {
    Array3 tau;

    static TariffSchedule ones(std::size_t countries, std::size_t sectors) {
        TariffSchedule t;
        t.tau = Array3(countries, countries, sectors, 1.0);
        return t;
    }
};

// Raw observed world: bilateral flows net of tariffs, IO usage tables,
// tariffs, sector metadata, GDP. Immutable once validated.
struct EconomyData {
    std::vector<std::string> countries;
    std::vector<SectorInfo> sectors;
    Array3 flows;     // value[importer i][exporter j][sector s], net of tariffs
    Array3 io_usage;  // value[country j][using sector s][input sector k]
    TariffSchedule tariffs;
    std::vector<double> gdp;

    std::size_t country_count() const { return countries.size(); }
    std::size_t sector_count() const { return sectors.size(); }

    std::size_t country_index(const std::string& id) const;
    std::size_t sector_index(const std::string& id) const;
};

enum class Severity { Warning, Fatal };

struct Violation {
    Severity severity;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    double world_deficit_sum = 0.0;  // informational

    bool clean() const {
        for (const auto& v : violations)
            if (v.severity == Severity::Fatal) return false;
        return true;
    }
};

ValidationReport validate(const EconomyData& data);

// All non-service sectors in declaration order; defines the strategy-vector layout.
std::vector<std::size_t> taxable_sectors(const EconomyData& data);
std::vector<std::size_t> taxable_sectors(const std::vector<SectorInfo>& sectors);

// Structural parameters fitting the data exactly at baseline.
struct CalibratedModel {
    std::vector<std::string> countries;
    std::vector<SectorInfo> sectors;

    Array3 gamma;   // taste shares gamma[i][j][s]
    Array2 a;       // final-consumption shares a[i][s], rows sum to 1
    Array3 alpha;   // IO coefficients alpha[j][s][k]
    std::vector<double> L;  // labor endowments
    std::vector<double> D;  // aggregate deficits (positive = deficit)
    Array3 t;       // iceberg costs t[i][j][s] in [1, 100]
    Array2 z;       // productivities z[j][s], 1 at calibration
    std::vector<double> w0; // baseline wages, 1 at calibration
    TariffSchedule baseline_tariffs;

    Array3 baseline_flows;    // retained for round-trip checks
    Array3 baseline_io;
    double baseline_labor_income = 0.0;  // sum_i w0_i L_i, the numeraire anchor

    std::size_t country_count() const { return countries.size(); }
    std::size_t sector_count() const { return sectors.size(); }
    double sigma(std::size_t s) const { return sectors[s].elasticity; }
};

struct SolveDiagnostics {
    int outer_iterations = 0;
    int inner_iterations = 0;  // total across outer steps
    double labor_residual = 0.0;
    double goods_residual = 0.0;
};

struct Equilibrium {
    std::vector<double> w;     // wages
    Array2 p_sector;           // p[i][s]
    Array3 p_bilateral;        // p[i][j][s], tariff-inclusive; 0 where no trade
    Array3 y_bilateral;        // y[i][j][s]
    Array2 y_sector;           // y[i][s]
    Array3 labor;              // l[i][j][s]
    Array3 io_usage;           // implied p_j^k x_j^{sk}, same layout as EconomyData::io_usage
    Array2 consumption;        // c[i][s]
    Array3 flows;              // implied net-of-tariff expenditures p_ij y_ij / tau
    std::vector<double> tariff_revenue;
    std::vector<double> income;
    std::vector<double> deficits_realized;
    SolveDiagnostics diagnostics;
};

struct WelfareReport {
    std::vector<double> welfare;    // W_i = prod_s c^a
    std::vector<double> beta;       // consumption-equivalent scalar vs reference
    std::vector<double> delta_pct;  // 100 (beta - 1)
};

}  // namespace tradewar
