#ifndef TRANSPORT_MODEL_HPP
#define TRANSPORT_MODEL_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace transport {

enum class Family { SIP, SEP, IRW, BEP, KMP, ThSIP, ThSEP, ThIRW, ThBEP };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

inline bool is_thermalized(Family f) {
    return f == Family::ThSIP || f == Family::ThSEP || f == Family::ThIRW || f == Family::ThBEP ||
           f == Family::KMP;
}

// Particle models carry discrete occupations; BEP/KMP/ThBEP carry energies.
inline bool is_discrete(Family f) {
    switch (f) {
        case Family::SIP:
        case Family::SEP:
        case Family::IRW:
        case Family::ThSIP:
        case Family::ThSEP:
        case Family::ThIRW: return true;
        default: return false;
    }
}

inline bool is_energy(Family f) { return !is_discrete(f); }

// SIP/BEP-type families are parametrized by 2k, SEP-type by 2j (an integer).
inline bool has_shape(Family f) {
    switch (f) {
        case Family::IRW:
        case Family::ThIRW:
        case Family::KMP: return false;
        default: return true;
    }
}

inline bool is_sep_type(Family f) { return f == Family::SEP || f == Family::ThSEP; }

struct BoundaryRates {
    double alpha = 0.0;  // left creation
    double gamma = 0.0;  // left annihilation
    double delta = 0.0;  // right creation
    double beta = 0.0;   // right annihilation
};

struct BoundaryTemperatures {
    double Ta = 0.0;
    double Tb = 0.0;
};

// BulkOnly disables the reservoirs entirely (used for scaling-limit and
// detailed-balance experiments on the closed chain).
struct BulkOnly {};

using BoundarySpec = std::variant<BoundaryRates, BoundaryTemperatures, BulkOnly>;

struct ModelSpec {
    Family family = Family::SIP;
    int L = 1;
    double shape = 1.0;  // 2k or 2j; ignored for IRW/ThIRW/KMP
    BoundarySpec boundary = BoundaryRates{};

    const BoundaryRates& rates() const;
    const BoundaryTemperatures& temperatures() const;
    bool bulk_only() const { return std::holds_alternative<BulkOnly>(boundary); }
};

class SpecError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Checks every parameter-domain constraint; returns the spec unchanged.
// Violations raise SpecError naming the constraint.
const ModelSpec& validate(const ModelSpec& spec);

struct ReservoirDensities {
    double rho_a = 0.0;
    double rho_b = 0.0;
};

// Imposed boundary densities: energy families report the imposed mean
// energies (4k T for BEP-type, T for KMP).
ReservoirDensities reservoir_densities(const ModelSpec& spec);

struct EquilibriumMarginal {
    enum class Kind { NegativeBinomial, Binomial, Poisson, Gamma };
    Kind kind;
    double shape = 0.0;  // 2k (NegBin/Gamma), 2j (Binomial); unused for Poisson
    double param = 0.0;  // success probability p, Poisson mean, or Gamma scale

    double pmf(int n) const;      // discrete kinds
    double density(double z) const;  // Gamma
    double mean() const;
    double variance() const;
    bool discrete() const { return kind != Kind::Gamma; }
    // Smallest cap with tail mass below `tail`, found by doubling.
    int support_cap(double tail = 1e-12) const;
};

// Single-site marginal of the equilibrium product measure imposed by the
// reservoirs. Requires alpha*beta = gamma*delta (equal temperatures for the
// energy families); throws SpecError otherwise.
EquilibriumMarginal equilibrium_marginal(const ModelSpec& spec);

// Free-parameter variant for the closed (bulk-only) chain: p for SIP/SEP,
// the Poisson mean for IRW, the Gamma scale for BEP-type families.
EquilibriumMarginal bulk_marginal(Family family, double shape, double parameter);

// One model per document, "key = value" lines.
std::string write_config(const ModelSpec& spec);
ModelSpec parse_config(const std::string& text);

}  // namespace transport

#endif
