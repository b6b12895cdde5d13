#include "tradewar/cp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace tradewar {

CPModel calibrate_cp(const EconomyData& data, const std::vector<double>& theta) {
    const ValidationReport rep = validate(data);
    if (!rep.clean()) throw std::runtime_error("invalid economy data for CP calibration");
    const std::size_t J = data.country_count(), S = data.sector_count();
    if (theta.size() != S) throw std::runtime_error("theta must have one entry per sector");
    for (double th : theta)
        if (!(th > 0.0)) throw std::runtime_error("theta must be positive");

    CPModel cp;
    cp.countries = data.countries;
    cp.sectors = data.sectors;
    cp.theta = theta;
    cp.baseline_tariffs = data.tariffs;

    const Array3& F = data.flows;
    const Array3& tau = data.tariffs.tau;

    // Expenditure shares from tariff-inclusive flows.
    cp.pi = Array3(J, J, S, 0.0);
    cp.X = Array2(J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            double total = 0.0;
            for (std::size_t n = 0; n < J; ++n) total += tau(i, n, s) * F(i, n, s);
            if (total <= 0.0)
                throw std::runtime_error("zero expenditure for " + data.countries[i] +
                                         " sector " + data.sectors[s].id);
            cp.X(i, s) = total;
            for (std::size_t n = 0; n < J; ++n)
                cp.pi(i, n, s) = tau(i, n, s) * F(i, n, s) / total;
        }

    // IO shares over net-of-tariff gross output; labor takes the remainder.
    cp.gamma_io = Array3(J, S, S, 0.0);
    cp.gamma_l = Array2(J, S, 1.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t s = 0; s < S; ++s) {
            double sales = 0.0;
            for (std::size_t n = 0; n < J; ++n) sales += F(n, i, s);
            double used = 0.0;
            for (std::size_t k = 0; k < S; ++k) {
                const double u = data.io_usage(i, s, k);
                if (u <= 0.0) continue;
                if (sales <= 0.0)
                    throw std::runtime_error("intermediate use without sales for " +
                                             data.countries[i] + " sector " +
                                             data.sectors[s].id);
                cp.gamma_io(i, s, k) = u / sales;
                used += u / sales;
            }
            cp.gamma_l(i, s) = 1.0 - used;
            if (cp.gamma_l(i, s) <= 0.0)
                throw std::runtime_error("non-positive labor share for " + data.countries[i] +
                                         " sector " + data.sectors[s].id);
        }

    // Aggregates: identical accounting to the Armington calibration.
    cp.D.assign(J, 0.0);
    cp.I.assign(J, 0.0);
    std::vector<double> T(J, 0.0);
    for (std::size_t i = 0; i < J; ++i) {
        for (std::size_t n = 0; n < J; ++n)
            for (std::size_t s = 0; s < S; ++s) {
                T[i] += (tau(i, n, s) - 1.0) * F(i, n, s);
                cp.I[i] += tau(i, n, s) * F(i, n, s);
                if (n != i) cp.D[i] += F(i, n, s) - F(n, i, s);
            }
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t k = 0; k < S; ++k) cp.I[i] -= data.io_usage(i, s, k);
    }
    cp.L.resize(J);
    cp.alpha_c = Array2(J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i) {
        cp.L[i] = cp.I[i] - T[i] - cp.D[i];
        if (cp.L[i] <= 0.0)
            throw std::runtime_error("inconsistent aggregates for " + data.countries[i]);
        cp.baseline_labor_income += cp.L[i];
        for (std::size_t s = 0; s < S; ++s) {
            double final_value = cp.X(i, s);
            for (std::size_t s2 = 0; s2 < S; ++s2) final_value -= data.io_usage(i, s2, s);
            cp.alpha_c(i, s) = std::max(0.0, final_value) / cp.I[i];
        }
    }
    return cp;
}

namespace {

struct HatPrices {
    Array2 hat_c, hat_p;
    int iterations = 0;
    bool converged = false;
};

HatPrices solve_hat_prices(const CPModel& cp, const Array3& kappa_hat,
                           const std::vector<double>& hat_w, const SolverOptions& opts) {
    const std::size_t J = cp.country_count(), S = cp.sector_count();
    HatPrices hp;
    hp.hat_c = Array2(J, S, 1.0);
    hp.hat_p = Array2(J, S, 1.0);
    for (int it = 0; it < opts.max_inner; ++it) {
        ++hp.iterations;
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t s = 0; s < S; ++s) {
                double c = std::pow(hat_w[i], cp.gamma_l(i, s));
                for (std::size_t k = 0; k < S; ++k)
                    if (cp.gamma_io(i, s, k) > 0.0)
                        c *= std::pow(hp.hat_p(i, k), cp.gamma_io(i, s, k));
                hp.hat_c(i, s) = c;
            }
        double diff = 0.0;
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t s = 0; s < S; ++s) {
                const double th = cp.theta[s];
                double acc = 0.0;
                for (std::size_t n = 0; n < J; ++n) {
                    const double share = cp.pi(i, n, s);
                    if (share <= 0.0) continue;
                    acc += share * std::pow(hp.hat_c(n, s) * kappa_hat(i, n, s), -th);
                }
                const double next = acc > 0.0 ? std::pow(acc, -1.0 / th) : 1.0;
                diff = std::max(diff, std::abs(next - hp.hat_p(i, s)) / hp.hat_p(i, s));
                hp.hat_p(i, s) = next;
            }
        if (diff < opts.tol_inner) {
            hp.converged = true;
            return hp;
        }
    }
    return hp;
}

}  // namespace

HatOutcome solve_hat(const CPModel& cp, const TariffSchedule& new_tariffs,
                     const SolverOptions& opts) {
    const std::size_t J = cp.country_count(), S = cp.sector_count();
    HatOutcome out;
    if (new_tariffs.tau.dim1() != J || new_tariffs.tau.dim2() != J ||
        new_tariffs.tau.dim3() != S) {
        out.message = "tariff schedule dimensions do not match model";
        return out;
    }

    Array3 kappa_hat(J, J, S, 1.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t n = 0; n < J; ++n)
            for (std::size_t s = 0; s < S; ++s)
                kappa_hat(i, n, s) = new_tariffs.tau(i, n, s) / cp.baseline_tariffs.tau(i, n, s);

    const std::size_t pin = opts.pinned_country;
    if (pin >= J) {
        out.message = "pinned country out of range";
        return out;
    }

    auto wages_from = [&](const std::vector<double>& u) {
        std::vector<double> hw(J, 1.0);
        for (std::size_t jj = 0, k = 0; jj < J; ++jj)
            if (jj != pin) hw[jj] = std::exp(u[k++]);
        if (opts.numeraire == SolverOptions::Numeraire::LaborIncomeSum) {
            const double target = opts.target > 0.0 ? opts.target : cp.baseline_labor_income;
            double total = 0.0;
            for (std::size_t jj = 0; jj < J; ++jj) total += hw[jj] * cp.L[jj];
            for (double& x : hw) x *= target / total;
        } else {
            const double target = opts.target > 0.0 ? opts.target : 1.0;
            const double f = target / hw[pin];
            for (double& x : hw) x *= f;
        }
        return hw;
    };

    int inner_total = 0;
    std::string failure;
    Array3 pi_prime(J, J, S, 0.0);
    Array2 Xp(J, S, 0.0);
    std::vector<double> Ip(J, 0.0);
    HatPrices hp;

    // Trade-balance residuals at candidate wage changes. Transfers ride on
    // world labor income, which keeps every real quantity (and welfare)
    // independent of the numeraire; under the default anchor the factor is 1.
    std::vector<double> deficits(J, 0.0);
    auto residuals = [&](const std::vector<double>& u, std::vector<double>& r) -> bool {
        const std::vector<double> hw = wages_from(u);
        double world_labor = 0.0;
        for (std::size_t jj = 0; jj < J; ++jj) world_labor += hw[jj] * cp.L[jj];
        for (std::size_t jj = 0; jj < J; ++jj)
            deficits[jj] = cp.D[jj] * world_labor / cp.baseline_labor_income;
        hp = solve_hat_prices(cp, kappa_hat, hw, opts);
        inner_total += hp.iterations;
        if (!hp.converged) {
            failure = "hat price fixed point did not converge";
            return false;
        }
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t n = 0; n < J; ++n)
                for (std::size_t s = 0; s < S; ++s) {
                    const double share = cp.pi(i, n, s);
                    if (share <= 0.0) continue;
                    const double th = cp.theta[s];
                    pi_prime(i, n, s) =
                        share * std::pow(hp.hat_c(n, s) * kappa_hat(i, n, s) / hp.hat_p(i, s),
                                         -th);
                }

        // Linear system in counterfactual expenditures X'.
        const std::size_t N = J * S;
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N),
                                                      static_cast<Eigen::Index>(N));
        Eigen::VectorXd b(static_cast<Eigen::Index>(N));
        auto idx = [S](std::size_t c, std::size_t s2) {
            return static_cast<Eigen::Index>(c * S + s2);
        };
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t s = 0; s < S; ++s) {
                const Eigen::Index row = idx(i, s);
                b(row) = cp.alpha_c(i, s) * (hw[i] * cp.L[i] + deficits[i]);
                // tariff revenue term of income, linear in i's own expenditures
                for (std::size_t k2 = 0; k2 < S; ++k2) {
                    double rev = 0.0;
                    for (std::size_t jj = 0; jj < J; ++jj) {
                        const double tp = new_tariffs.tau(i, jj, k2);
                        rev += (tp - 1.0) / tp * pi_prime(i, jj, k2);
                    }
                    A(row, idx(i, k2)) -= cp.alpha_c(i, s) * rev;
                }
                // intermediate demand: producers of k in i buy s-composites
                for (std::size_t k2 = 0; k2 < S; ++k2) {
                    const double g = cp.gamma_io(i, k2, s);
                    if (g <= 0.0) continue;
                    for (std::size_t n = 0; n < J; ++n) {
                        const double share = pi_prime(n, i, k2);
                        if (share <= 0.0) continue;
                        A(row, idx(n, k2)) -= g * share / new_tariffs.tau(n, i, k2);
                    }
                }
            }
        const Eigen::VectorXd x = A.partialPivLu().solve(b);
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t s = 0; s < S; ++s) {
                const double v = x(idx(i, s));
                if (!std::isfinite(v)) {
                    failure = "expenditure system produced non-finite values";
                    return false;
                }
                Xp(i, s) = v;
            }

        for (std::size_t i = 0; i < J; ++i) {
            double rev = 0.0;
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t jj = 0; jj < J; ++jj) {
                    const double tp = new_tariffs.tau(i, jj, s);
                    rev += (tp - 1.0) / tp * pi_prime(i, jj, s) * Xp(i, s);
                }
            Ip[i] = hw[i] * cp.L[i] + rev + deficits[i];
        }

        r.clear();
        for (std::size_t i = 0; i < J; ++i) {
            if (i == pin) continue;
            double imports = 0.0, exports = 0.0;
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t jj = 0; jj < J; ++jj) {
                    if (jj == i) continue;
                    imports += pi_prime(i, jj, s) * Xp(i, s) / new_tariffs.tau(i, jj, s);
                    exports += pi_prime(jj, i, s) * Xp(jj, s) / new_tariffs.tau(jj, i, s);
                }
            r.push_back((imports - exports - deficits[i]) / (cp.L[i]));
        }
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
            os << "hat wage solver stalled at residual " << rnorm;
            out.status = SolveStatus::OuterFailure;
            out.message = os.str();
            return out;
        }
    }
    if (rnorm >= opts.tol_outer && n > 0) {
        std::ostringstream os;
        os << "hat wage solver hit iteration limit at residual " << rnorm;
        out.status = SolveStatus::OuterFailure;
        out.message = os.str();
        return out;
    }

    if (!residuals(u, r)) {
        out.status = SolveStatus::InnerFailure;
        out.message = failure;
        return out;
    }

    HatEquilibrium eq;
    eq.hat_w = wages_from(u);
    eq.hat_c = hp.hat_c;
    eq.hat_p = hp.hat_p;
    eq.hat_pi = Array3(J, J, S, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t nn = 0; nn < J; ++nn)
            for (std::size_t s = 0; s < S; ++s)
                if (cp.pi(i, nn, s) > 0.0)
                    eq.hat_pi(i, nn, s) = pi_prime(i, nn, s) / cp.pi(i, nn, s);
    eq.X_prime = Xp;
    eq.I_prime = Ip;
    eq.diagnostics.outer_iterations = outer;
    eq.diagnostics.inner_iterations = inner_total;
    eq.diagnostics.labor_residual = rnorm;
    eq.hat_W.assign(J, 1.0);
    for (std::size_t i = 0; i < J; ++i) {
        double deflator = 1.0;
        for (std::size_t s = 0; s < S; ++s)
            if (cp.alpha_c(i, s) > 0.0)
                deflator *= std::pow(eq.hat_p(i, s), cp.alpha_c(i, s));
        eq.hat_W[i] = (Ip[i] / cp.I[i]) / deflator;
    }

    out.status = SolveStatus::Converged;
    out.eq = std::move(eq);
    return out;
}

std::vector<double> welfare_hat(const CPModel& cp, const HatEquilibrium& eq) {
    (void)cp;
    return eq.hat_W;
}

CPEvaluator::CPEvaluator(const CPModel& cp, std::size_t chooser, std::size_t partner,
                         TariffSchedule base, SolverOptions solver_opts)
    : cp_(cp),
      chooser_(chooser),
      partner_(partner),
      base_(std::move(base)),
      sopts_(std::move(solver_opts)) {
    if (chooser_ == partner_ || chooser_ >= cp.country_count() ||
        partner_ >= cp.country_count())
        throw std::runtime_error("bad chooser/partner pair");
    sectors_ = taxable_sectors(cp.sectors);
    if (sectors_.empty()) throw std::runtime_error("no taxable sectors");
}

TariffSchedule CPEvaluator::schedule_for(const Candidate& tau) const {
    TariffSchedule sched = base_;
    for (std::size_t k = 0; k < sectors_.size(); ++k)
        sched.tau(chooser_, partner_, sectors_[k]) = tau[k];
    return sched;
}

std::optional<double> CPEvaluator::evaluate(const Candidate& tau) const {
    if (tau.size() != sectors_.size()) throw std::runtime_error("candidate dimension mismatch");
    const HatOutcome sol = solve_hat(cp_, schedule_for(tau), sopts_);
    if (!sol.ok()) return std::nullopt;
    return sol.eq.hat_W[chooser_];
}

}  // namespace tradewar
