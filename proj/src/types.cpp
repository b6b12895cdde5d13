#include "tradewar/types.hpp"

#include <cmath>
#include <sstream>

namespace tradewar {

namespace {

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::size_t EconomyData::country_index(const std::string& id) const {
    for (std::size_t i = 0; i < countries.size(); ++i)
        if (countries[i] == id) return i;
    throw std::runtime_error("unknown country id: " + id);
}

std::size_t EconomyData::sector_index(const std::string& id) const {
    for (std::size_t s = 0; s < sectors.size(); ++s)
        if (sectors[s].id == id) return s;
    throw std::runtime_error("unknown sector id: " + id);
}

ValidationReport validate(const EconomyData& data) {
    ValidationReport rep;
    const std::size_t J = data.country_count();
    const std::size_t S = data.sector_count();

    auto fatal = [&](const std::string& m) { rep.violations.push_back({Severity::Fatal, m}); };
    auto warn = [&](const std::string& m) { rep.violations.push_back({Severity::Warning, m}); };

    if (J == 0) fatal("no countries");
    if (S == 0) fatal("no sectors");

    if (data.flows.dim1() != J || data.flows.dim2() != J || data.flows.dim3() != S)
        fatal("flows tensor dimension mismatch");
    if (data.io_usage.dim1() != J || data.io_usage.dim2() != S || data.io_usage.dim3() != S)
        fatal("io_usage tensor dimension mismatch");
    if (data.tariffs.tau.dim1() != J || data.tariffs.tau.dim2() != J || data.tariffs.tau.dim3() != S)
        fatal("tariff tensor dimension mismatch");
    if (data.gdp.size() != J) fatal("gdp vector dimension mismatch");
    if (!rep.clean()) return rep;

    for (std::size_t s = 0; s < S; ++s) {
        if (!(data.sectors[s].elasticity > 1.0)) {
            std::ostringstream os;
            os << "sector " << data.sectors[s].id << " has elasticity <= 1";
            fatal(os.str());
        }
    }

    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                const double f = data.flows(i, j, s);
                const double tau = data.tariffs.tau(i, j, s);
                if (!finite(f)) fatal("non-finite flow at (" + data.countries[i] + "," + data.countries[j] + "," + data.sectors[s].id + ")");
                else if (f < 0.0) fatal("negative flow at (" + data.countries[i] + "," + data.countries[j] + "," + data.sectors[s].id + ")");
                if (!finite(tau) || tau < 1.0) fatal("tariff factor below 1 at (" + data.countries[i] + "," + data.countries[j] + "," + data.sectors[s].id + ")");
                if (i == j && tau != 1.0) fatal("domestic tariff factor not 1 for " + data.countries[i] + " sector " + data.sectors[s].id);
                if (data.sectors[s].is_service && tau != 1.0)
                    fatal("service sector tariffed: " + data.sectors[s].id + " (" + data.countries[i] + "<-" + data.countries[j] + ")");
            }

    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t s = 0; s < S; ++s) {
            double used = 0.0;
            for (std::size_t k = 0; k < S; ++k) {
                const double u = data.io_usage(j, s, k);
                if (!finite(u) || u < 0.0) fatal("invalid io_usage at (" + data.countries[j] + "," + data.sectors[s].id + "," + data.sectors[k].id + ")");
                used += u;
            }
            double sales = 0.0;
            for (std::size_t i = 0; i < J; ++i) sales += data.flows(i, j, s);
            if (used > sales * (1.0 + 1e-12) && used > 0.0)
                fatal("intermediate use exceeds gross output for " + data.countries[j] + " sector " + data.sectors[s].id);
        }

    // World deficit sum is informational: real datasets are inconsistent.
    double world = 0.0;
    for (std::size_t i = 0; i < J; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s)
                d += data.flows(i, j, s) - data.flows(j, i, s);
        world += d;
    }
    rep.world_deficit_sum = world;
    double gross = 0.0;
    for (double v : data.flows.raw()) gross += v;
    if (gross > 0.0 && std::abs(world) > 1e-6 * gross)
        warn("world deficits do not sum to zero");

    return rep;
}

std::vector<std::size_t> taxable_sectors(const std::vector<SectorInfo>& sectors) {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < sectors.size(); ++s)
        if (!sectors[s].is_service) out.push_back(s);
    return out;
}

std::vector<std::size_t> taxable_sectors(const EconomyData& data) {
    return taxable_sectors(data.sectors);
}

}  // namespace tradewar
