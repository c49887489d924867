#include "transport/distributions.hpp"

#include <cmath>

#include "transport/special.hpp"

namespace transport {

std::vector<double> RedistributionKernel::pmf(int total) const {
    std::vector<double> p(static_cast<std::size_t>(total) + 1, 0.0);
    switch (kind) {
        case Kind::Uniform: {
            const double w = 1.0 / (total + 1);
            for (auto& v : p) v = w;
            return p;  // exact already
        }
        case Kind::Binomial: {
            for (int r = 0; r <= total; ++r)
                p[r] = std::exp(log_binomial(total, r) - total * std::log(2.0));
            break;
        }
        case Kind::NegHypergeometric: {
            // C(2k+r-1, r) C(2k+E-r-1, E-r) / C(4k+E-1, E), via log-gamma
            const double k2 = shape;
            const double lden = std::lgamma(2.0 * k2 + total) - std::lgamma(total + 1.0) -
                                std::lgamma(2.0 * k2);
            for (int r = 0; r <= total; ++r) {
                const double lnum = std::lgamma(k2 + r) - std::lgamma(r + 1.0) -
                                    std::lgamma(k2) + std::lgamma(k2 + total - r) -
                                    std::lgamma(total - r + 1.0) - std::lgamma(k2);
                p[r] = std::exp(lnum - lden);
            }
            break;
        }
        case Kind::Hypergeometric: {
            const int j2 = static_cast<int>(std::round(shape));
            if (total > 2 * j2)
                throw SpecError("redistribution total exceeds the exclusion bond capacity");
            const double lden = log_binomial(2 * j2, total);
            for (int r = 0; r <= total; ++r) {
                if (r > j2 || total - r > j2) continue;  // outside the support
                p[r] = std::exp(log_binomial(j2, r) + log_binomial(j2, total - r) - lden);
            }
            break;
        }
    }
    double sum = 0.0;
    for (double v : p) sum += v;
    for (auto& v : p) v /= sum;
    return p;
}

RedistributionKernel bond_kernel(Family family, double shape) {
    switch (family) {
        case Family::SIP:
        case Family::ThSIP:
        case Family::ThBEP:
        case Family::BEP:
            return {RedistributionKernel::Kind::NegHypergeometric, shape};
        case Family::SEP:
        case Family::ThSEP: return {RedistributionKernel::Kind::Hypergeometric, shape};
        case Family::IRW:
        case Family::ThIRW: return {RedistributionKernel::Kind::Binomial, 0.0};
        case Family::KMP: return {RedistributionKernel::Kind::Uniform, 1.0};
    }
    throw SpecError("unreachable");
}

EquilibriumMarginal thermal_bath_marginal(const ModelSpec& spec, bool left) {
    const auto& r = spec.rates();
    const double create = left ? r.alpha : r.delta;
    const double annihilate = left ? r.gamma : r.beta;
    switch (spec.family) {
        case Family::ThSIP:
            return {EquilibriumMarginal::Kind::NegativeBinomial, spec.shape,
                    create / annihilate};
        case Family::ThSEP:
            return {EquilibriumMarginal::Kind::Binomial, spec.shape,
                    create / (annihilate + create)};
        case Family::ThIRW:
            return {EquilibriumMarginal::Kind::Poisson, 0.0, create / annihilate};
        default: throw SpecError("thermal baths exist only for discrete thermalized families");
    }
}

}  // namespace transport
