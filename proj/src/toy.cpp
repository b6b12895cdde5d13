#include "tradewar/toy.hpp"

#include <cmath>
#include <stdexcept>

namespace tradewar {

namespace {

// Demands at a candidate price. Tariff revenue is substituted out analytically:
// with the CES ratio c12 = c22 (p/(1+tau2))^sigma2 the Country 2 budget collapses
// to c22 (p + (p/(1+tau2))^sigma2) = p E2 - d, and symmetrically for Country 1.
struct Demands {
    double c11, c21, c12, c22;
    bool feasible;
};

Demands demands_at(const ToyParams& pr, double p) {
    Demands d{};
    const double inc1 = pr.E1 + pr.d;
    const double inc2 = p * pr.E2 - pr.d;
    if (inc1 <= 0.0 || inc2 <= 0.0) {
        d.feasible = false;
        return d;
    }
    const double q1 = p * (1.0 + pr.tau1);          // Country 1 domestic price of good 2
    const double q2 = p / (1.0 + pr.tau2);          // inverse relative domestic price, C2
    d.c21 = inc1 / (std::pow(q1, pr.sigma1) + p);
    d.c11 = d.c21 * std::pow(q1, pr.sigma1);
    d.c22 = inc2 / (p + std::pow(q2, pr.sigma2));
    d.c12 = d.c22 * std::pow(q2, pr.sigma2);
    d.feasible = true;
    return d;
}

// Excess demand for good 2. Positive at low p, negative at high p.
double excess2(const ToyParams& pr, double p) {
    const Demands d = demands_at(pr, p);
    if (!d.feasible) throw std::runtime_error("infeasible price during bisection");
    return d.c21 + d.c22 - pr.E2;
}

double utility(double ca, double cb, double sigma) {
    const double rho = (sigma - 1.0) / sigma;
    return std::pow(ca, rho) + std::pow(cb, rho);
}

}  // namespace

ToyEquilibrium solve_toy(const ToyParams& pr) {
    if (pr.E1 <= 0.0 || pr.E2 <= 0.0) throw std::runtime_error("endowments must be positive");
    if (pr.sigma1 <= 1.0 || pr.sigma2 <= 1.0) throw std::runtime_error("elasticities must exceed 1");
    if (pr.tau1 < 0.0 || pr.tau2 < 0.0) throw std::runtime_error("tariffs must be non-negative");
    if (pr.E1 + pr.d <= 0.0) throw std::runtime_error("transfer exhausts Country 1 income");

    // Incomes must stay positive: p > d/E2 when d > 0.
    double lo = 1e-6, hi = 1e6;
    if (pr.d > 0.0) lo = std::max(lo, pr.d / pr.E2 * (1.0 + 1e-12) + 1e-300);
    if (lo >= hi) throw std::runtime_error("transfer too large for any market-clearing price");

    double flo = excess2(pr, lo), fhi = excess2(pr, hi);
    if (flo < 0.0 || fhi > 0.0) {
        // Walk the bracket endpoints if the default window misses the root.
        int guard = 0;
        while (flo < 0.0 && ++guard < 60 && pr.d <= 0.0) {
            lo /= 10.0;
            flo = excess2(pr, lo);
        }
        guard = 0;
        while (fhi > 0.0 && ++guard < 60) {
            hi *= 10.0;
            fhi = excess2(pr, hi);
        }
        if (flo < 0.0 || fhi > 0.0)
            throw std::runtime_error("failed to bracket market-clearing price");
    }

    for (int it = 0; it < 400 && (hi - lo) > 1e-12 * std::max(1.0, lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess2(pr, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double p = 0.5 * (lo + hi);
    const Demands dm = demands_at(pr, p);

    ToyEquilibrium eq;
    eq.p = p;
    eq.c11 = dm.c11;
    eq.c21 = dm.c21;
    eq.c12 = dm.c12;
    eq.c22 = dm.c22;
    eq.T1 = p * pr.tau1 * dm.c21;
    eq.T2 = pr.tau2 * dm.c12;
    eq.lambda2 = 1.0 / (1.0 + std::pow(p / (1.0 + pr.tau2), pr.sigma2 - 1.0));
    eq.U1 = utility(dm.c11, dm.c21, pr.sigma1);
    eq.U2 = utility(dm.c12, dm.c22, pr.sigma2);
    return eq;
}

double foc_residual(const ToyParams& pr, const ToyEquilibrium& eq) {
    const double inner = eq.lambda2 * ((pr.sigma2 * (1.0 + pr.tau2) - 1.0) * eq.c12 / (eq.c12 + pr.d) -
                                       pr.d / (eq.p * eq.c21));
    return pr.tau1 - 1.0 / inner;
}

ToyGridResult optimal_tariff_grid(ToyParams pr, double lo, double hi, double step) {
    if (step <= 0.0 || hi < lo) throw std::runtime_error("bad tariff grid");
    ToyGridResult best{lo, -1.0};
    const long n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
    for (long k = 0; k <= n; ++k) {
        pr.tau1 = lo + step * static_cast<double>(k);
        const ToyEquilibrium eq = solve_toy(pr);
        if (eq.U1 > best.utility_star) best = {pr.tau1, eq.U1};
    }
    return best;
}

ToyGridResult optimal_tariff_country2(ToyParams pr, double lo, double hi, double step) {
    if (step <= 0.0 || hi < lo) throw std::runtime_error("bad tariff grid");
    ToyGridResult best{lo, -1.0};
    const long n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
    for (long k = 0; k <= n; ++k) {
        pr.tau2 = lo + step * static_cast<double>(k);
        const ToyEquilibrium eq = solve_toy(pr);
        if (eq.U2 > best.utility_star) best = {pr.tau2, eq.U2};
    }
    return best;
}

std::optional<double> optimal_tariff_foc_root(ToyParams pr, double lo, double hi) {
    auto res = [&](double tau) {
        pr.tau1 = tau;
        const ToyEquilibrium eq = solve_toy(pr);
        return foc_residual(pr, eq);
    };
    double flo = res(lo), fhi = res(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) return std::nullopt;
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = res(mid);
        if (fm == 0.0) return mid;
        if (fm * flo < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace tradewar
