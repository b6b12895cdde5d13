#include "tradewar/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace tradewar {

namespace {

struct PriceBlock {
    Array2 p_sector;    // p[i][s]
    Array3 p_bilateral; // tau * t * unit_cost, all cells
    Array2 unit_cost;   // w/z + sum_k p alpha, per (j,s)
    int iterations = 0;
    bool converged = false;
};

// Successive substitution on the sector price indices for fixed wages.
PriceBlock solve_prices(const CalibratedModel& m, const TariffSchedule& tariffs,
                        const std::vector<double>& w, const SolverOptions& opts) {
    const std::size_t J = m.country_count(), S = m.sector_count();
    PriceBlock pb;
    pb.p_sector = Array2(J, S, 0.0);
    pb.p_bilateral = Array3(J, J, S, 0.0);
    pb.unit_cost = Array2(J, S, 0.0);

    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t s = 0; s < S; ++s) pb.p_sector(j, s) = w[j] / m.z(j, s);

    for (int it = 0; it < opts.max_inner; ++it) {
        ++pb.iterations;
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                double inputs = 0.0;
                for (std::size_t k = 0; k < S; ++k)
                    inputs += pb.p_sector(j, k) * m.alpha(j, s, k);
                pb.unit_cost(j, s) = w[j] / m.z(j, s) + inputs;
            }
        double diff = 0.0;
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t s = 0; s < S; ++s) {
                const double sig = m.sigma(s);
                double acc = 0.0;
                bool any = false;
                for (std::size_t j = 0; j < J; ++j) {
                    const double g = m.gamma(i, j, s);
                    if (g <= 0.0) continue;
                    const double pij =
                        tariffs.tau(i, j, s) * m.t(i, j, s) * pb.unit_cost(j, s);
                    acc += std::pow(g, sig) * std::pow(pij, 1.0 - sig);
                    any = true;
                }
                // A sector with no admissible origin can only appear with zero
                // consumption/input shares; pin its index at 1.
                const double next = any ? std::pow(acc, 1.0 / (1.0 - sig)) : 1.0;
                diff = std::max(diff, std::abs(next - pb.p_sector(i, s)) /
                                          std::max(1e-300, pb.p_sector(i, s)));
                pb.p_sector(i, s) = next;
            }
        if (diff < opts.tol_inner) {
            pb.converged = true;
            break;
        }
    }
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s)
                pb.p_bilateral(i, j, s) =
                    tariffs.tau(i, j, s) * m.t(i, j, s) * pb.unit_cost(j, s);
    return pb;
}

struct Quantities {
    Array2 y_sector;  // y[i][s]
    Array3 k_demand;  // y_ij / y_i^s
    bool ok = false;
};

// Sector outputs solve a linear system: output = final demand (income linear in
// own outputs through tariff revenue) + intermediate demand (linear in all).
Quantities solve_quantities(const CalibratedModel& m, const TariffSchedule& tariffs,
                            const std::vector<double>& w, const std::vector<double>& deficits,
                            const PriceBlock& pb) {
    const std::size_t J = m.country_count(), S = m.sector_count();
    const std::size_t N = J * S;
    Quantities q;
    q.k_demand = Array3(J, J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                const double g = m.gamma(i, j, s);
                if (g <= 0.0) continue;
                const double sig = m.sigma(s);
                q.k_demand(i, j, s) =
                    std::pow(g, sig) *
                    std::pow(pb.p_sector(i, s) / pb.p_bilateral(i, j, s), sig);
            }

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N),
                                                  static_cast<Eigen::Index>(N));
    Eigen::VectorXd b(static_cast<Eigen::Index>(N));
    auto idx = [S](std::size_t c, std::size_t s) {
        return static_cast<Eigen::Index>(c * S + s);
    };

    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < S; ++k) {
            const Eigen::Index row = idx(j, k);
            const double afrac = m.a(j, k) / pb.p_sector(j, k);
            b(row) = afrac * (w[j] * m.L[j] + deficits[j]);
            // tariff revenue: duties on j's imports scale with j's own outputs
            for (std::size_t s = 0; s < S; ++s) {
                double rev = 0.0;
                for (std::size_t i = 0; i < J; ++i) {
                    const double tau = tariffs.tau(j, i, s);
                    rev += (tau - 1.0) / tau * pb.p_bilateral(j, i, s) * q.k_demand(j, i, s);
                }
                A(row, idx(j, s)) -= afrac * rev;
            }
            // intermediate demand from j's producers serving every destination
            for (std::size_t s = 0; s < S; ++s) {
                if (m.alpha(j, s, k) <= 0.0) continue;
                for (std::size_t i = 0; i < J; ++i)
                    A(row, idx(i, s)) -=
                        m.alpha(j, s, k) * m.t(i, j, s) * q.k_demand(i, j, s);
            }
        }

    Eigen::VectorXd y = A.partialPivLu().solve(b);
    q.y_sector = Array2(J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            const double v = y(idx(i, s));
            if (!std::isfinite(v)) return q;
            q.y_sector(i, s) = v;
        }
    q.ok = true;
    return q;
}

std::vector<double> labor_demand(const CalibratedModel& m, const Quantities& q) {
    const std::size_t J = m.country_count(), S = m.sector_count();
    std::vector<double> demand(J, 0.0);
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t i = 0; i < J; ++i)
                demand[j] += m.t(i, j, s) * q.k_demand(i, j, s) * q.y_sector(i, s) / m.z(j, s);
    return demand;
}

}  // namespace

SolveOutcome solve_counterfactual(const CalibratedModel& m, const TariffSchedule& tariffs,
                                  const SolverOptions& opts) {
    const std::size_t J = m.country_count(), S = m.sector_count();
    SolveOutcome out;

    if (tariffs.tau.dim1() != J || tariffs.tau.dim2() != J || tariffs.tau.dim3() != S) {
        out.message = "tariff schedule dimensions do not match model";
        return out;
    }

    // Nominal anchor and the implied rescaling of the fixed transfers.
    double scale = 1.0;
    if (opts.numeraire == SolverOptions::Numeraire::LaborIncomeSum) {
        const double target = opts.target > 0.0 ? opts.target : m.baseline_labor_income;
        scale = target / m.baseline_labor_income;
    } else {
        const double target =
            opts.target > 0.0 ? opts.target : m.w0[opts.pinned_country];
        scale = target / m.w0[opts.pinned_country];
    }
    std::vector<double> deficits = opts.deficit_override.empty() ? m.D : opts.deficit_override;
    if (deficits.size() != J) {
        out.message = "deficit override dimension mismatch";
        return out;
    }
    for (double& d : deficits) d *= scale;

    const std::size_t pin = opts.pinned_country;
    if (pin >= J) {
        out.message = "pinned country out of range";
        return out;
    }

    // Wages from the reduced unknowns u (log relative wages, pinned entry fixed).
    auto wages_from = [&](const std::vector<double>& u) {
        std::vector<double> w(J);
        for (std::size_t j = 0, k = 0; j < J; ++j)
            w[j] = (j == pin) ? m.w0[j] : m.w0[j] * std::exp(u[k++]);
        if (opts.numeraire == SolverOptions::Numeraire::LaborIncomeSum) {
            const double target = opts.target > 0.0 ? opts.target : m.baseline_labor_income;
            double total = 0.0;
            for (std::size_t j = 0; j < J; ++j) total += w[j] * m.L[j];
            for (double& x : w) x *= target / total;
        } else {
            const double target = opts.target > 0.0 ? opts.target : m.w0[pin];
            const double f = target / w[pin];
            for (double& x : w) x *= f;
        }
        return w;
    };

    int inner_total = 0;
    std::string failure;
    // Residuals of the dropped-equation system; empty optional on solve failure.
    auto residuals = [&](const std::vector<double>& u, std::vector<double>& r) -> bool {
        const std::vector<double> w = wages_from(u);
        const PriceBlock pb = solve_prices(m, tariffs, w, opts);
        inner_total += pb.iterations;
        if (!pb.converged) {
            failure = "price fixed point did not converge";
            return false;
        }
        const Quantities q = solve_quantities(m, tariffs, w, deficits, pb);
        if (!q.ok) {
            failure = "quantity system produced non-finite outputs";
            return false;
        }
        const std::vector<double> demand = labor_demand(m, q);
        r.clear();
        for (std::size_t j = 0; j < J; ++j)
            if (j != pin) r.push_back((demand[j] - m.L[j]) / m.L[j]);
        return true;
    };

    auto norm_inf = [](const std::vector<double>& v) {
        double n = 0.0;
        for (double x : v) n = std::max(n, std::abs(x));
        return n;
    };

    const std::size_t n = J - 1;
    std::vector<double> u(n, 0.0), r;
    if (!residuals(u, r)) {
        out.status = SolveStatus::InnerFailure;
        out.message = failure;
        return out;
    }

    int outer = 0;
    double rnorm = norm_inf(r);
    double lambda = opts.damping;
    while (rnorm >= opts.tol_outer && outer < opts.max_outer && n > 0) {
        ++outer;
        // Forward-difference Jacobian.
        Eigen::MatrixXd Jm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const double h = 1e-7;
        std::vector<double> rp;
        bool ok = true;
        for (std::size_t c = 0; c < n && ok; ++c) {
            std::vector<double> up = u;
            up[c] += h;
            ok = residuals(up, rp);
            if (!ok) break;
            for (std::size_t rr = 0; rr < n; ++rr)
                Jm(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(c)) =
                    (rp[rr] - r[rr]) / h;
        }
        if (!ok) {
            out.status = SolveStatus::InnerFailure;
            out.message = failure;
            return out;
        }

        Eigen::VectorXd rv(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) rv(static_cast<Eigen::Index>(k)) = r[k];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Jm);
        std::vector<double> step(n);
        if (lu.isInvertible()) {
            Eigen::VectorXd sv = lu.solve(rv);
            for (std::size_t k = 0; k < n; ++k) step[k] = sv(static_cast<Eigen::Index>(k));
        } else {
            // Tatonnement fallback: excess labor demand raises the wage.
            for (std::size_t k = 0; k < n; ++k) step[k] = -0.1 * r[k];
        }

        bool accepted = false;
        double trial = lambda;
        for (int bt = 0; bt < 25; ++bt) {
            std::vector<double> ut = u;
            for (std::size_t k = 0; k < n; ++k) ut[k] -= trial * step[k];
            std::vector<double> rt;
            if (residuals(ut, rt) && norm_inf(rt) < rnorm) {
                u = ut;
                r = rt;
                rnorm = norm_inf(rt);
                lambda = std::min(1.0, trial * 2.0);
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if (!accepted) {
            std::ostringstream os;
            os << "wage solver stalled at residual " << rnorm;
            out.status = SolveStatus::OuterFailure;
            out.message = os.str();
            return out;
        }
    }

    if (rnorm >= opts.tol_outer && n > 0) {
        std::ostringstream os;
        os << "wage solver hit iteration limit at residual " << rnorm;
        out.status = SolveStatus::OuterFailure;
        out.message = os.str();
        return out;
    }

    // Assemble the equilibrium at the converged wages.
    const std::vector<double> w = wages_from(u);
    const PriceBlock pb = solve_prices(m, tariffs, w, opts);
    const Quantities q = solve_quantities(m, tariffs, w, deficits, pb);
    if (!pb.converged || !q.ok) {
        out.status = SolveStatus::InnerFailure;
        out.message = "failed to re-evaluate at converged wages";
        return out;
    }

    Equilibrium eq;
    eq.w = w;
    eq.p_sector = pb.p_sector;
    eq.p_bilateral = Array3(J, J, S, 0.0);
    eq.y_bilateral = Array3(J, J, S, 0.0);
    eq.y_sector = q.y_sector;
    eq.labor = Array3(J, J, S, 0.0);
    eq.io_usage = Array3(J, S, S, 0.0);
    eq.consumption = Array2(J, S, 0.0);
    eq.flows = Array3(J, J, S, 0.0);
    eq.tariff_revenue.assign(J, 0.0);
    eq.income.assign(J, 0.0);
    eq.deficits_realized.assign(J, 0.0);

    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t s = 0; s < S; ++s) {
                const double k = q.k_demand(i, j, s);
                if (k <= 0.0) continue;
                const double y = k * q.y_sector(i, s);
                const double pij = pb.p_bilateral(i, j, s);
                const double tau = tariffs.tau(i, j, s);
                eq.p_bilateral(i, j, s) = pij;
                eq.y_bilateral(i, j, s) = y;
                eq.labor(i, j, s) = m.t(i, j, s) * y / m.z(j, s);
                eq.flows(i, j, s) = pij * y / tau;
                eq.tariff_revenue[i] += (tau - 1.0) * pij * y / tau;
                for (std::size_t k2 = 0; k2 < S; ++k2)
                    eq.io_usage(j, s, k2) +=
                        pb.p_sector(j, k2) * m.alpha(j, s, k2) * m.t(i, j, s) * y;
            }

    for (std::size_t i = 0; i < J; ++i) {
        eq.income[i] = w[i] * m.L[i] + eq.tariff_revenue[i] + deficits[i];
        for (std::size_t s = 0; s < S; ++s)
            eq.consumption(i, s) = m.a(i, s) * eq.income[i] / pb.p_sector(i, s);
        for (std::size_t j = 0; j < J; ++j)
            if (j != i)
                for (std::size_t s = 0; s < S; ++s)
                    eq.deficits_realized[i] += eq.flows(i, j, s) - eq.flows(j, i, s);
    }

    // Goods-market identity: consumption plus intermediate use equals output.
    double goods_res = 0.0;
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < S; ++k) {
            double use = eq.consumption(j, k);
            for (std::size_t s = 0; s < S; ++s)
                use += eq.io_usage(j, s, k) / pb.p_sector(j, k);
            goods_res = std::max(goods_res,
                                 std::abs(use - q.y_sector(j, k)) /
                                     std::max(1.0, std::abs(q.y_sector(j, k))));
        }

    const std::vector<double> demand = labor_demand(m, q);
    double labor_res = 0.0;
    for (std::size_t j = 0; j < J; ++j)
        labor_res = std::max(labor_res, std::abs(demand[j] - m.L[j]) / m.L[j]);

    eq.diagnostics.outer_iterations = outer;
    eq.diagnostics.inner_iterations = inner_total;
    eq.diagnostics.labor_residual = labor_res;
    eq.diagnostics.goods_residual = goods_res;

    out.status = SolveStatus::Converged;
    out.eq = std::move(eq);
    return out;
}

std::vector<double> welfare_levels(const CalibratedModel& m, const Equilibrium& eq) {
    const std::size_t J = m.country_count(), S = m.sector_count();
    std::vector<double> W(J, 1.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            const double a = m.a(i, s);
            if (a <= 0.0) continue;
            const double c = eq.consumption(i, s);
            if (c <= 0.0) throw std::runtime_error("zero consumption in a valued sector");
            W[i] *= std::pow(c, a);
        }
    return W;
}

WelfareReport welfare(const CalibratedModel& m, const Equilibrium& reference,
                      const Equilibrium& counterfactual) {
    const std::size_t J = m.country_count(), S = m.sector_count();
    WelfareReport rep;
    rep.welfare = welfare_levels(m, counterfactual);
    rep.beta.assign(J, 1.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            const double a = m.a(i, s);
            if (a <= 0.0) continue;
            const double c0 = reference.consumption(i, s);
            const double c1 = counterfactual.consumption(i, s);
            if (c0 <= 0.0 || c1 <= 0.0)
                throw std::runtime_error("zero consumption in a valued sector");
            rep.beta[i] *= std::pow(c1 / c0, a);
        }
    rep.delta_pct.resize(J);
    for (std::size_t i = 0; i < J; ++i) rep.delta_pct[i] = 100.0 * (rep.beta[i] - 1.0);
    return rep;
}

CalibratedModel autarky_model(const CalibratedModel& model, std::size_t country,
                              std::size_t partner) {
    if (model.country_count() != 2)
        throw std::runtime_error("autarky option is defined for 2-country models");
    if (country == partner || country >= 2 || partner >= 2)
        throw std::runtime_error("bad autarky pair");
    CalibratedModel m = model;
    for (std::size_t s = 0; s < m.sector_count(); ++s) {
        m.gamma(country, partner, s) = 0.0;
        m.gamma(partner, country, s) = 0.0;
    }
    // No trade, no transfer.
    m.D[country] = 0.0;
    m.D[partner] = 0.0;
    return m;
}

SolveOutcome autarky_equilibrium(const CalibratedModel& model, std::size_t country,
                                 std::size_t partner, const SolverOptions& opts) {
    const CalibratedModel m = autarky_model(model, country, partner);
    return solve_counterfactual(m, m.baseline_tariffs, opts);
}

double numerical_elasticity(const CalibratedModel& model, std::size_t importer,
                            std::size_t exporter, std::size_t sector,
                            const SolverOptions& opts) {
    if (model.gamma(importer, exporter, sector) <= 0.0)
        throw std::runtime_error("no baseline trade in the probed cell");
    const SolveOutcome base = solve_counterfactual(model, model.baseline_tariffs, opts);
    if (!base.ok()) throw std::runtime_error("baseline solve failed: " + base.message);

    CalibratedModel perturbed = model;
    perturbed.t(importer, exporter, sector) += 1e-4;
    const SolveOutcome alt = solve_counterfactual(perturbed, model.baseline_tariffs, opts);
    if (!alt.ok()) throw std::runtime_error("perturbed solve failed: " + alt.message);

    const double y0 = base.eq.y_bilateral(importer, exporter, sector);
    const double y1 = alt.eq.y_bilateral(importer, exporter, sector);
    const double p0 = base.eq.p_bilateral(importer, exporter, sector);
    const double p1 = alt.eq.p_bilateral(importer, exporter, sector);
    const double dlp = std::log(p1) - std::log(p0);
    if (dlp == 0.0) throw std::runtime_error("degenerate perturbation: price unchanged");
    return (std::log(y1) - std::log(y0)) / dlp;
}

}  // namespace tradewar
