#ifndef TRANSPORT_MFT_HPP
#define TRANSPORT_MFT_HPP

#include <vector>

#include "transport/model.hpp"

namespace transport {

// Constant diffusivity with quadratic mobility sigma = 2 A rho (B - rho).
// The walker and redistribution limits are kept as direct formulas because
// their (A, B) parametrizations are singular.
struct TransportCoefficients {
    Family family;
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;
    bool finite_parametrization = true;

    double diffusivity(double) const { return c; }
    double mobility(double rho) const;
};

TransportCoefficients transport_coefficients(Family family, double shape);

struct MacroCorrelations {
    double mean = 0.0;         // <rho(x)>
    double two_point = 0.0;    // <rho(x) rho(y)>_c, includes the 1/L factor
    double three_point = 0.0;  // <rho(x) rho(y) rho(z)>_c, includes 1/L^2
};

// Closed-form hydrodynamic correlations at 0 < x < y < z < 1.
MacroCorrelations macro_correlations(Family family, double shape, double rho_a, double rho_b,
                                     double x, double y, double z, double chain_length);

struct MacroProfile {
    std::vector<double> x;    // uniform grid on [0,1]
    std::vector<double> rho;
};

MacroProfile linear_profile(double rho_a, double rho_b, int points = 401);

struct AuxiliaryProfile {
    std::vector<double> x;
    std::vector<double> f;
    double ode_residual = 0.0;  // max-norm of the collocation equations
};

// Monotone solution of rho = F + F(B - F) F'' / (F')^2 with F(0) = rho_a,
// F(1) = rho_b, by shooting plus a Newton collocation polish. B depends on
// the family (2j, -2k, 0); the walker limit returns the linear profile.
AuxiliaryProfile solve_auxiliary_profile(Family family, double shape, const MacroProfile& rho,
                                         double rho_a, double rho_b);

// Same solver for an explicit mobility parameter B (used by the scaling
// relation between families).
AuxiliaryProfile solve_auxiliary_profile_b(double b_param, const MacroProfile& rho, double rho_a,
                                           double rho_b);

// Density large-deviation functional evaluated at the optimal auxiliary
// profile (composite Simpson).
double ld_functional(Family family, double shape, const MacroProfile& rho, double rho_a,
                     double rho_b);

// Generic quadratic-mobility functional scaled by C/(A B); families with
// finite parametrization reduce to this with their own (A, B, C).
double ld_functional_quadratic(double a_param, double b_param, double c_param,
                               const MacroProfile& rho, double rho_a, double rho_b);

struct MicroMacroRow {
    int L = 0;
    double max_gap = 0.0;  // max |L cov_micro - macro kernel|
    double rel_gap = 0.0;  // relative to the largest kernel value
};

// Convergence of the microscopic covariances to the hydrodynamic kernel for
// the parameter regimes with closed-form covariances.
std::vector<MicroMacroRow> micro_macro_compare(Family family, double shape, double rho_a,
                                               double rho_b, const std::vector<int>& sizes);

}  // namespace transport

#endif
