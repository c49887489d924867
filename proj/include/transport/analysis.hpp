#ifndef TRANSPORT_ANALYSIS_HPP
#define TRANSPORT_ANALYSIS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "transport/duality.hpp"
#include "transport/generator.hpp"
#include "transport/model.hpp"

namespace transport {

// Stationary profile <eta_i> (or <z_i>), i = 1..L, from the single-walker
// absorption probabilities; exact for every family.
std::vector<double> profile_closed_form(const ModelSpec& spec);

// Parameter regimes with bilinear two-point functions:
//   (a) exclusion at 2j = 1, any rates
//   (b) exclusion with gamma + alpha = 2j and beta + delta = 2j
//   (c) inclusion with gamma - alpha = 2k and beta - delta = 2k
//   (d) the energy diffusion at 2k = 1/2
bool bilinear_covariance_available(const ModelSpec& spec);

// Closed-form truncated correlation <n_i n_l>_c for i < l (1-based); throws
// when no closed form covers the parameters.
double covariance_closed_form(const ModelSpec& spec, int i, int l);

// The steady-state two-point linear system (L(L+1)/2 unknowns X_{i,l}), with
// the profile supplied by profile_closed_form. Particle chains and the
// energy diffusion; needs L >= 3.
struct CorrelationSolution {
    int L = 0;
    std::vector<double> profile;
    Eigen::MatrixXd second;  // X_{i,l}, symmetric

    double covariance(int i, int l) const {  // 1-based
        return second(i - 1, l - 1) - profile[i - 1] * profile[l - 1];
    }
};

CorrelationSolution solve_appendix_system(const ModelSpec& spec);

struct BilinearFit {
    // X_{i,l} = A i l + B i + C l + D off the diagonal, E i^2 + F i + G on it
    double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0, g = 0;
    double fit_residual = 0;     // max |X_fit - X|
    double system_residual = 0;  // two-point equations evaluated at the fit
};

BilinearFit fit_bilinear(const ModelSpec& spec, const CorrelationSolution& solution);

// Differences of connected correlations along the chain, from the exact
// stationary distribution. Constant d (resp. e) sequences indicate bi-
// (tri-)linearity.
struct MultilinearityResult {
    std::vector<double> d;  // i = 2..L-1
    std::vector<double> e;  // i = 3..L-1
    double solver_residual = 0;
    std::string d_verdict;
    std::string e_verdict;
};

MultilinearityResult multilinearity_experiment(const ModelSpec& spec);

// Closed-form single-site stationary moments of the thermalized chains at
// L = 1 (factorial moments for particles, power moments for energies).
double th_moment_L1(const ModelSpec& spec, int order);

// Max deviation of <prod eta_i!/(eta_i - xi_i)!> from prod lambda_i^{xi_i}
// over all xi with |xi| <= max_order (independent-walker product test).
double irw_product_check(const ModelSpec& spec, int max_order = 3);

// Closed linear evolution of first and second moments of the closed chains.
struct MomentSystem {
    int L = 0;
    Eigen::MatrixXd a;  // d/dt v = a v on [m_1..m_L, X_11, X_12, .., X_LL]

    int mean_index(int i) const { return i; }                    // 0-based
    int pair_index(int i, int l) const;                          // i <= l
    Eigen::VectorXd pack(const std::vector<double>& m, const Eigen::MatrixXd& x) const;
};

MomentSystem bulk_moment_system(Family family, int L, double shape);

// Rescaled inclusion chain vs. its diffusion limit: exact second-moment
// trajectories at increasing particle number.
struct ScalingReport {
    std::vector<double> particle_numbers;
    std::vector<double> discrepancy;  // max second-moment gap at time t
};

ScalingReport inclusion_diffusion_scaling(int L, double shape, double total_energy,
                                          const std::vector<double>& particle_numbers, double t);

// Rescaled independent walkers vs. the deterministic limit: exact master
// equation means against the linear heat flow; returns the max gap at t.
double walkers_deterministic_scaling(int L, int particles, double total_energy, double t);

}  // namespace transport

#endif
