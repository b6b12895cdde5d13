#pragma once

#include <optional>

namespace tradewar {

// Two-country, two-good CES endowment economy with an exogenous transfer d
// (Country 1's trade deficit, denominated in good 1; negative d flips roles).
struct ToyParams {
    double E1 = 1.0;
    double E2 = 1.0;
    double sigma1 = 2.0;
    double sigma2 = 2.0;
    double tau1 = 0.0;  // net tariff rates (ad valorem), >= 0
    double tau2 = 0.0;
    double d = 0.0;
};

struct ToyEquilibrium {
    double p = 0.0;    // price of good 2 in good-1 units
    double c11 = 0.0;  // Country 1 consumption of good 1
    double c21 = 0.0;  // Country 1 consumption of good 2
    double c12 = 0.0;  // Country 2 consumption of good 1
    double c22 = 0.0;  // Country 2 consumption of good 2
    double T1 = 0.0;
    double T2 = 0.0;
    double lambda2 = 0.0;  // Country 2 domestic absorption
    double U1 = 0.0;
    double U2 = 0.0;
};

ToyEquilibrium solve_toy(const ToyParams& params);

// Country 1 tariff optimality residual; zero at the welfare-maximizing tariff.
double foc_residual(const ToyParams& params, const ToyEquilibrium& eq);

struct ToyGridResult {
    double tau_star = 0.0;
    double utility_star = 0.0;
};

// Exhaustive search over Country 1's tariff; ties break toward the lower tariff.
ToyGridResult optimal_tariff_grid(ToyParams params, double lo, double hi, double step);

// Same search with roles reversed (Country 2 chooses tau2 to maximize U2).
ToyGridResult optimal_tariff_country2(ToyParams params, double lo, double hi, double step);

// Root of foc_residual in tau1, bracketed within [lo, hi]; nullopt if no sign change.
std::optional<double> optimal_tariff_foc_root(ToyParams params, double lo, double hi);

}  // namespace tradewar
