#include "tradewar/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tradewar {

namespace {

std::string cell_name(const EconomyData& d, std::size_t i, std::size_t j, std::size_t s) {
    return "(" + d.countries[i] + "," + d.countries[j] + "," + d.sectors[s].id + ")";
}

void require_clean(const EconomyData& data) {
    const ValidationReport rep = validate(data);
    if (!rep.clean()) {
        std::string msg = "invalid economy data:";
        for (const auto& v : rep.violations)
            if (v.severity == Severity::Fatal) msg += " " + v.message + ";";
        throw std::runtime_error(msg);
    }
}

// Exact-fit pipeline for a given iceberg-cost tensor. Wages and productivities
// are normalized to 1; every model identity then holds at the data by
// construction, so the baseline equilibrium reproduces the flows.
CalibratedModel calibrate_with_t(const EconomyData& data, Array3 t) {
    const std::size_t J = data.country_count(), S = data.sector_count();
    CalibratedModel m;
    m.countries = data.countries;
    m.sectors = data.sectors;
    m.baseline_tariffs = data.tariffs;
    m.baseline_flows = data.flows;
    m.baseline_io = data.io_usage;
    m.t = std::move(t);
    m.z = Array2(J, S, 1.0);
    m.w0.assign(J, 1.0);

    const Array3& F = data.flows;
    const Array3& tau = data.tariffs.tau;

    // Aggregates.
    std::vector<double> T(J, 0.0), D(J, 0.0), I(J, 0.0);
    for (std::size_t i = 0; i < J; ++i) {
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                T[i] += (tau(i, j, s) - 1.0) * F(i, j, s);
                I[i] += tau(i, j, s) * F(i, j, s);
                if (j != i) D[i] += F(i, j, s) - F(j, i, s);
            }
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t k = 0; k < S; ++k) I[i] -= data.io_usage(i, s, k);
    }
    m.D = D;
    m.L.resize(J);
    for (std::size_t i = 0; i < J; ++i) {
        m.L[i] = I[i] - T[i] - D[i];
        if (m.L[i] <= 0.0)
            throw std::runtime_error("inconsistent aggregates: non-positive labor income for " +
                                     data.countries[i]);
        m.baseline_labor_income += m.L[i];
    }

    // Cost shares: every destination of (j,s) splits its net-of-tariff flow
    // into labor and intermediates in the same proportion.
    Array2 interm_share(J, S, 0.0);  // sum_k IOU / gross sales
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t s = 0; s < S; ++s) {
            double sales = 0.0, used = 0.0;
            for (std::size_t i = 0; i < J; ++i) sales += F(i, j, s);
            for (std::size_t k = 0; k < S; ++k) used += data.io_usage(j, s, k);
            if (used > 0.0 && sales <= 0.0)
                throw std::runtime_error("intermediate use without sales for " +
                                         data.countries[j] + " sector " + data.sectors[s].id);
            interm_share(j, s) = sales > 0.0 ? used / sales : 0.0;
            if (interm_share(j, s) > 1.0)
                throw std::runtime_error("intermediate use exceeds sales for " +
                                         data.countries[j] + " sector " + data.sectors[s].id +
                                         " in cell " + cell_name(data, j, j, s));
        }

    // Per-destination labor value, quantities, prices.
    Array3 labor(J, J, S, 0.0), y(J, J, S, 0.0), p(J, J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                const double f = F(i, j, s);
                if (f <= 0.0) continue;
                labor(i, j, s) = f * (1.0 - interm_share(j, s));
                y(i, j, s) = labor(i, j, s) / m.t(i, j, s);
                if (y(i, j, s) <= 0.0)
                    throw std::runtime_error("zero implied output in cell " +
                                             cell_name(data, i, j, s));
                p(i, j, s) = tau(i, j, s) * f / y(i, j, s);
            }

    // Taste shares and sector price indices.
    m.gamma = Array3(J, J, S, 0.0);
    Array2 p_index(J, S, 1.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            const double sig = data.sectors[s].elasticity;
            double denom = 0.0;
            for (std::size_t j = 0; j < J; ++j)
                if (y(i, j, s) > 0.0)
                    denom += p(i, j, s) * std::pow(y(i, j, s), 1.0 / sig);
            if (denom <= 0.0) continue;  // no purchases; gamma stays 0
            double acc = 0.0;
            for (std::size_t j = 0; j < J; ++j) {
                if (y(i, j, s) <= 0.0) continue;
                m.gamma(i, j, s) = p(i, j, s) * std::pow(y(i, j, s), 1.0 / sig) / denom;
                acc += std::pow(m.gamma(i, j, s), sig) * std::pow(p(i, j, s), 1.0 - sig);
            }
            p_index(i, s) = std::pow(acc, 1.0 / (1.0 - sig));
        }

    // IO coefficients: inputs per efficiency unit of labor, common across
    // destinations by the proportional cost split above.
    m.alpha = Array3(J, S, S, 0.0);
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t s = 0; s < S; ++s) {
            double lab = 0.0;
            for (std::size_t i = 0; i < J; ++i) lab += labor(i, j, s);
            for (std::size_t k = 0; k < S; ++k) {
                const double use = data.io_usage(j, s, k);
                if (use <= 0.0) continue;
                if (lab <= 0.0)
                    throw std::runtime_error("intermediate use without labor for " +
                                             data.countries[j] + " sector " +
                                             data.sectors[s].id);
                m.alpha(j, s, k) = use / (p_index(j, k) * lab);
            }
        }

    // Final consumption shares.
    m.a = Array2(J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            double final_value = 0.0;
            for (std::size_t j = 0; j < J; ++j) final_value += tau(i, j, s) * F(i, j, s);
            for (std::size_t s2 = 0; s2 < S; ++s2) final_value -= data.io_usage(i, s2, s);
            if (final_value < -1e-9 * std::max(1.0, I[i]))
                throw std::runtime_error("negative final consumption for " + data.countries[i] +
                                         " sector " + data.sectors[s].id);
            m.a(i, s) = std::max(0.0, final_value) / I[i];
        }
    return m;
}

double bilateral_deficit(const Array3& flows, std::size_t i, std::size_t j) {
    double d = 0.0;
    for (std::size_t s = 0; s < flows.dim3(); ++s) d += flows(i, j, s) - flows(j, i, s);
    return d;
}

}  // namespace

CalibratedModel calibrate(const EconomyData& data, const CalibrationOptions& opts) {
    if (opts.mode == CalibrationOptions::Mode::Iceberg) return calibrate_iceberg(data, opts);
    require_clean(data);
    const std::size_t J = data.country_count(), S = data.sector_count();
    return calibrate_with_t(data, Array3(J, J, S, 1.0));
}

CalibratedModel calibrate_iceberg(const EconomyData& data, const CalibrationOptions& opts) {
    require_clean(data);
    if (opts.iceberg_lower < 1.0 || opts.iceberg_upper < opts.iceberg_lower)
        throw std::runtime_error("bad iceberg bounds");
    const std::size_t J = data.country_count(), S = data.sector_count();

    // With t_jj = 1 and w = z = 1 the domestic price collapses to
    // E_jj / y_jj = 1 / (1 - intermediate cost share).
    Array2 p_domestic(J, S, 0.0);
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t s = 0; s < S; ++s) {
            double sales = 0.0, used = 0.0;
            for (std::size_t i = 0; i < J; ++i) sales += data.flows(i, j, s);
            for (std::size_t k = 0; k < S; ++k) used += data.io_usage(j, s, k);
            if (sales > 0.0) p_domestic(j, s) = 1.0 / (1.0 - used / sales);
        }

    Array3 t(J, J, S, 1.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) {
            if (i == j) continue;
            for (std::size_t s = 0; s < S; ++s) {
                const double Eij = data.tariffs.tau(i, j, s) * data.flows(i, j, s);
                if (Eij <= 0.0) continue;  // zeros stay preference-driven
                const double Eii = data.flows(i, i, s);
                if (Eii <= 0.0)
                    throw std::runtime_error(
                        "iceberg calibration needs a positive domestic flow for " +
                        data.countries[i] + " sector " + data.sectors[s].id);
                const double sig = data.sectors[s].elasticity;
                const double raw = (1.0 / data.tariffs.tau(i, j, s)) *
                                   (p_domestic(i, s) / p_domestic(j, s)) *
                                   std::pow(Eij / Eii, 1.0 / (1.0 - sig));
                t(i, j, s) = std::clamp(raw, opts.iceberg_lower, opts.iceberg_upper);
            }
        }
    return calibrate_with_t(data, std::move(t));
}

RebalanceResult rebalance_row_exports(const EconomyData& data) {
    RebalanceResult res;
    res.data = data;
    const std::size_t J = data.country_count(), S = data.sector_count();
    Array3& F = res.data.flows;

    double gross = 0.0;
    for (double v : F.raw()) gross += v;
    const double tol = 1e-12 * std::max(1.0, gross);

    auto deficit = [&](std::size_t i) {
        double d = 0.0;
        for (std::size_t j = 0; j < J; ++j)
            if (j != i)
                for (std::size_t s = 0; s < S; ++s) d += F(i, j, s) - F(j, i, s);
        return d;
    };

    // The world deficit sum is invariant under export scaling; balance each
    // country to the achievable common mean.
    double world = 0.0;
    for (std::size_t i = 0; i < J; ++i) world += deficit(i);
    const double target = world / static_cast<double>(J);
    if (std::abs(world) > 1e-9 * std::max(1.0, gross)) {
        std::ostringstream os;
        os << "world deficits sum to " << world << "; balancing to the common mean " << target;
        res.warning = os.str();
    }

    for (int pass = 0; pass < 1000; ++pass) {
        double worst = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double d = deficit(j) - target;
            worst = std::max(worst, std::abs(d));
            if (std::abs(d) <= tol) continue;
            double exports = 0.0;
            for (std::size_t i = 0; i < J; ++i)
                if (i != j)
                    for (std::size_t s = 0; s < S; ++s) exports += F(i, j, s);
            if (exports <= 0.0)
                throw std::runtime_error("cannot rebalance " + data.countries[j] +
                                         ": zero exports with nonzero deficit");
            const double factor = 1.0 + d / exports;
            if (factor <= 0.0)
                throw std::runtime_error("cannot rebalance " + data.countries[j] +
                                         ": required export scale is non-positive");
            for (std::size_t i = 0; i < J; ++i)
                if (i != j)
                    for (std::size_t s = 0; s < S; ++s) F(i, j, s) *= factor;
        }
        ++res.passes;
        if (worst <= tol) return res;
    }
    throw std::runtime_error("export rebalancing did not converge");
}

EconomyData economy_from(const CalibratedModel& model, const Equilibrium& eq,
                         const TariffSchedule& tariffs) {
    EconomyData data;
    data.countries = model.countries;
    data.sectors = model.sectors;
    data.flows = eq.flows;
    data.io_usage = eq.io_usage;
    data.tariffs = tariffs;
    data.gdp = eq.income;
    return data;
}

CalibratedModel rebaseline(const CalibratedModel& model, const TariffSchedule& tariffs,
                           const std::optional<std::vector<double>>& new_deficits,
                           const CalibrationOptions& opts) {
    SolverOptions sopts;
    if (new_deficits) sopts.deficit_override = *new_deficits;
    const SolveOutcome sol = solve_counterfactual(model, tariffs, sopts);
    if (!sol.ok()) throw std::runtime_error("rebaseline solve failed: " + sol.message);
    const EconomyData data = economy_from(model, sol.eq, tariffs);
    // Trade costs are structural and carry over; only preferences re-fit.
    if (opts.mode == CalibrationOptions::Mode::Iceberg) return calibrate_iceberg(data, opts);
    Array3 t = model.t;
    return calibrate_with_t(data, std::move(t));
}

EliminationResult eliminate_bilateral_deficit(const CalibratedModel& model, std::size_t i,
                                              std::size_t j) {
    const std::size_t J = model.country_count(), S = model.sector_count();
    if (i == j || i >= J || j >= J) throw std::runtime_error("bad country pair");

    double gross_pair = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        gross_pair += model.baseline_flows(i, j, s) + model.baseline_flows(j, i, s);
    if (gross_pair <= 0.0) throw std::runtime_error("pair does not trade");
    const double b = bilateral_deficit(model.baseline_flows, i, j);

    // zeta scales importer j's taste for origin i; eta keeps each sector's
    // share sum at 1. Admissibility: eta >= 0, i.e. zeta <= 1/gamma_ji.
    double zeta_max = 100.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double g = model.gamma(j, i, s);
        if (g > 0.0 && g < 1.0) zeta_max = std::min(zeta_max, (1.0 - 1e-9) / g);
    }

    auto modified = [&](double zeta) {
        CalibratedModel m = model;
        for (std::size_t s = 0; s < S; ++s) {
            const double g = m.gamma(j, i, s);
            if (g <= 0.0) continue;
            if (g >= 1.0) continue;  // sole supplier; nothing to reweight
            const double eta = (1.0 - zeta * g) / (1.0 - g);
            for (std::size_t o = 0; o < J; ++o)
                m.gamma(j, o, s) *= (o == i) ? zeta : eta;
        }
        m.D[i] -= b;
        m.D[j] += b;
        return m;
    };

    auto residual = [&](double zeta) {
        const CalibratedModel m = modified(zeta);
        const SolveOutcome sol = solve_counterfactual(m, m.baseline_tariffs);
        if (!sol.ok())
            throw std::runtime_error("elimination solve failed at zeta=" + std::to_string(zeta) +
                                     ": " + sol.message);
        return bilateral_deficit(sol.eq.flows, i, j);
    };

    double lo = 0.01, hi = zeta_max;
    double flo = residual(lo), fhi = residual(hi);
    if (flo * fhi > 0.0) {
        std::ostringstream os;
        os << "cannot bracket zeta: f(" << lo << ")=" << flo << ", f(" << hi << ")=" << fhi;
        throw std::runtime_error(os.str());
    }
    const double tol = 1e-8 * gross_pair;
    double fmid = flo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        fmid = residual(mid);
        if (std::abs(fmid) <= tol && it > 0) {
            lo = hi = mid;
            break;
        }
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-13 * std::max(1.0, lo)) break;
    }

    EliminationResult res;
    res.zeta = 0.5 * (lo + hi);
    res.bilateral_deficit_removed = b;
    const CalibratedModel m = modified(res.zeta);
    res.model = rebaseline(m, m.baseline_tariffs);
    return res;
}

EconomyData aggregate(const EconomyData& data,
                      const std::map<std::string, std::string>& sector_map,
                      const std::map<std::string, std::string>& region_map,
                      const AggregationOptions& opts) {
    const std::size_t J = data.country_count(), S = data.sector_count();

    // Composite ordering follows first appearance in the source ordering.
    std::vector<std::string> new_countries, new_sector_ids;
    std::vector<std::size_t> cmap(J), smap(S);
    for (std::size_t i = 0; i < J; ++i) {
        const auto it = region_map.find(data.countries[i]);
        if (it == region_map.end())
            throw std::runtime_error("unmapped country: " + data.countries[i]);
        auto pos = std::find(new_countries.begin(), new_countries.end(), it->second);
        if (pos == new_countries.end()) {
            cmap[i] = new_countries.size();
            new_countries.push_back(it->second);
        } else {
            cmap[i] = static_cast<std::size_t>(pos - new_countries.begin());
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        const auto it = sector_map.find(data.sectors[s].id);
        if (it == sector_map.end())
            throw std::runtime_error("unmapped sector: " + data.sectors[s].id);
        auto pos = std::find(new_sector_ids.begin(), new_sector_ids.end(), it->second);
        if (pos == new_sector_ids.end()) {
            smap[s] = new_sector_ids.size();
            new_sector_ids.push_back(it->second);
        } else {
            smap[s] = static_cast<std::size_t>(pos - new_sector_ids.begin());
        }
    }
    const std::size_t Jn = new_countries.size(), Sn = new_sector_ids.size();

    EconomyData out;
    out.countries = new_countries;
    out.flows = Array3(Jn, Jn, Sn, 0.0);
    out.io_usage = Array3(Jn, Sn, Sn, 0.0);
    out.gdp.assign(Jn, 0.0);

    // Composite sector metadata: trade-weighted elasticity; service status must
    // be uniform within a composite.
    std::vector<double> sector_trade(S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) sector_trade[s] += data.flows(i, j, s);
    out.sectors.resize(Sn);
    std::vector<double> wsum(Sn, 0.0), esum(Sn, 0.0);
    std::vector<int> svc(Sn, -1);
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t n = smap[s];
        out.sectors[n].id = new_sector_ids[n];
        out.sectors[n].name = new_sector_ids[n];
        const double wgt = sector_trade[s] > 0.0 ? sector_trade[s] : 1.0;
        wsum[n] += wgt;
        esum[n] += wgt * data.sectors[s].elasticity;
        if (svc[n] == -1) svc[n] = data.sectors[s].is_service ? 1 : 0;
        else if (svc[n] != (data.sectors[s].is_service ? 1 : 0))
            throw std::runtime_error("composite " + new_sector_ids[n] +
                                     " mixes service and goods sectors");
    }
    for (std::size_t n = 0; n < Sn; ++n) {
        out.sectors[n].elasticity = esum[n] / wsum[n];
        out.sectors[n].is_service = svc[n] == 1;
        const auto ov = opts.elasticity_override.find(new_sector_ids[n]);
        if (ov != opts.elasticity_override.end()) out.sectors[n].elasticity = ov->second;
    }

    // Flows, IO, GDP.
    for (std::size_t i = 0; i < J; ++i) {
        out.gdp[cmap[i]] += data.gdp[i];
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s)
                out.flows(cmap[i], cmap[j], smap[s]) += data.flows(i, j, s);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t k = 0; k < S; ++k)
                out.io_usage(cmap[i], smap[s], smap[k]) += data.io_usage(i, s, k);
    }

    // Composite tariffs: trade-weighted (or simple) mean of member factors.
    out.tariffs = TariffSchedule::ones(Jn, Sn);
    Array3 tw(Jn, Jn, Sn, 0.0), ts(Jn, Jn, Sn, 0.0), tn(Jn, Jn, Sn, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t ni = cmap[i], nj = cmap[j], ns = smap[s];
                const double f = data.flows(i, j, s);
                tw(ni, nj, ns) += f * data.tariffs.tau(i, j, s);
                ts(ni, nj, ns) += data.tariffs.tau(i, j, s);
                tn(ni, nj, ns) += 1.0;
                out.tariffs.tau(ni, nj, ns) = 0.0;  // mark as aggregated below
            }
    for (std::size_t i = 0; i < Jn; ++i)
        for (std::size_t j = 0; j < Jn; ++j)
            for (std::size_t s = 0; s < Sn; ++s) {
                if (i == j || out.sectors[s].is_service) {
                    // intra-composite trade becomes domestic; drop its tariffs
                    out.tariffs.tau(i, j, s) = 1.0;
                    continue;
                }
                const double total_flow = out.flows(i, j, s);
                if (!opts.simple_average_tariffs && total_flow > 0.0)
                    out.tariffs.tau(i, j, s) = tw(i, j, s) / total_flow;
                else
                    out.tariffs.tau(i, j, s) = ts(i, j, s) / tn(i, j, s);
            }
    return out;
}

}  // namespace tradewar
