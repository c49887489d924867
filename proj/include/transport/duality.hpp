#ifndef TRANSPORT_DUALITY_HPP
#define TRANSPORT_DUALITY_HPP

#include <Eigen/SparseCore>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "transport/distributions.hpp"
#include "transport/generator.hpp"
#include "transport/model.hpp"

namespace transport {

// xi over the extended chain 0..L+1; slots 0 and L+1 count absorbed walkers.
using DualConfig = std::vector<int>;

inline int dual_total(const DualConfig& xi) {
    int n = 0;
    for (int v : xi) n += v;
    return n;
}

// The companion process with absorbing ends. Base-family duals keep the bulk
// dynamics and absorb single walkers at rates (u, v); thermalized duals (and
// the KMP dual) redistribute bond totals by the family kernel and absorb the
// whole boundary pile at unit rate.
struct DualModel {
    Family bulk_family;
    double shape;
    int L;
    double absorb_left;
    double absorb_right;
    bool redistributing;
    RedistributionKernel kernel;  // meaningful when redistributing
};

DualModel dual_model(const ModelSpec& spec);

// Single-walker parameters of Table form: bulk jump rate 1/c per direction,
// absorption rates u (left) and v (right).
struct DualWalkerRates {
    double c;
    double u;
    double v;
};

DualWalkerRates dual_walker_rates(const ModelSpec& spec);

// Boundary weights (w_a, w_b) carried by the duality function at the slots.
std::pair<double, double> duality_weights(const ModelSpec& spec);

// Per-site duality factor scale: <eta_i> = stationary D-expectation of a
// single walker at i divided by this constant.
double duality_site_scale(const ModelSpec& spec);

// D(eta, xi) of the discrete families (falling factorials).
double duality_eval(const ModelSpec& spec, const Config& eta, const DualConfig& xi);

// D(z, xi) of the energy families (monomials).
double duality_eval_energy(const ModelSpec& spec, const std::vector<double>& z,
                           const DualConfig& xi);

// Outgoing transitions of the dual process (exact list; no truncation).
void dual_transitions(const ModelSpec& spec, const DualConfig& xi,
                      const std::function<void(const DualConfig&, double)>& emit);

// Closed form for the left-absorption probability of one dual walker;
// entries 0..L+1 with p_0 = 1 and p_{L+1} = 0.
std::vector<double> single_walker_absorption(const ModelSpec& spec);

// Oracle: the same probabilities from the discrete boundary-value system.
std::vector<double> single_walker_absorption_system(const ModelSpec& spec);

struct AbsorptionTable {
    std::vector<double> probability;  // index m = walkers absorbed at slot 0
    std::vector<double> std_error;    // zero for the exact method
};

// Exact absorption split of |xi| dual walkers started from xi, by a sparse
// linear solve on the conserved-|xi| sector.
AbsorptionTable absorption_table_exact(const ModelSpec& spec, const DualConfig& xi,
                                       std::size_t state_budget = 2'000'000);

// Monte Carlo variant (Gillespie until every walker is absorbed).
AbsorptionTable absorption_table_mc(const ModelSpec& spec, const DualConfig& xi, int runs,
                                    std::uint64_t seed);

// <D(eta, xi)> in the stationary state via absorption probabilities.
double stationary_expectation(const ModelSpec& spec, const DualConfig& xi);
double stationary_expectation(const ModelSpec& spec, const DualConfig& xi,
                              const AbsorptionTable& table);

// Conserved-|xi| sector of the dual chain with its generator matrix.
struct DualSector {
    std::vector<DualConfig> states;
    std::map<DualConfig, int> index;
    Eigen::SparseMatrix<double, Eigen::RowMajor> rates;
};

DualSector build_dual_sector(const ModelSpec& spec, int total,
                             std::size_t state_budget = 2'000'000);

// E_eta[D(eta_t, xi0)] computed through the dual evolution d/dt G = L_dual G.
double moment_evolution(const ModelSpec& spec, const Config& eta, const DualConfig& xi0,
                        double t);
double moment_evolution_energy(const ModelSpec& spec, const std::vector<double>& z,
                               const DualConfig& xi0, double t);

// e^{tQ} v by uniformization (exact Poisson-weighted series).
Eigen::VectorXd semigroup_apply(const Eigen::SparseMatrix<double, Eigen::RowMajor>& q,
                                Eigen::VectorXd v, double t);

// |[L D(.,xi)](eta) - [L_dual D(eta,.)](xi)|, both sides evaluated exactly
// (closed-form reservoir moments; no state-space truncation).
double duality_identity_residual(const ModelSpec& spec, const Config& eta,
                                 const DualConfig& xi);
double duality_identity_residual_energy(const ModelSpec& spec, const std::vector<double>& z,
                                        const DualConfig& xi);

// Max residual over eta in {0..eta_cap}^L and all xi with |xi| <= xi_total.
// Energy families scan a fixed lattice of z vectors instead.
double check_duality_identity(const ModelSpec& spec, int eta_cap, int xi_total);

}  // namespace transport

#endif
