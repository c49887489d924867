#ifndef TRANSPORT_DISTRIBUTIONS_HPP
#define TRANSPORT_DISTRIBUTIONS_HPP

#include <vector>

#include "transport/model.hpp"

namespace transport {

// Law of the left share when a bond's total content E is redistributed by the
// instantaneous-thermalization rule of the given family:
//   SIP-type  negative hypergeometric (E, 4k-1, 2k)
//   SEP-type  hypergeometric (E, 4j, 2j)
//   IRW-type  binomial (E, 1/2)
//   KMP       uniform on {0..E}  (the 2k = 1 case of the SIP-type kernel)
// The continuous families redistribute via Beta(2k, 2k) shares instead.
struct RedistributionKernel {
    enum class Kind { NegHypergeometric, Hypergeometric, Binomial, Uniform };
    Kind kind;
    double shape = 0.0;  // 2k or 2j of the underlying family

    // pmf over r = 0..E, renormalized so the entries sum to exactly 1.
    std::vector<double> pmf(int total) const;
    double mean(int total) const { return 0.5 * total; }
};

// Bond kernel for a discrete thermalized family (KMP maps to Uniform).
RedistributionKernel bond_kernel(Family family, double shape);

// Reservoir resampling laws of the discrete thermalized families.
// left=true selects the (alpha, gamma) reservoir, otherwise (delta, beta).
EquilibriumMarginal thermal_bath_marginal(const ModelSpec& spec, bool left);

}  // namespace transport

#endif
