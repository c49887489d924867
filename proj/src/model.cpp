#include "transport/model.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "transport/special.hpp"

namespace transport {

std::string family_name(Family f) {
    switch (f) {
        case Family::SIP: return "sip";
        case Family::SEP: return "sep";
        case Family::IRW: return "irw";
        case Family::BEP: return "bep";
        case Family::KMP: return "kmp";
        case Family::ThSIP: return "th-sip";
        case Family::ThSEP: return "th-sep";
        case Family::ThIRW: return "th-irw";
        case Family::ThBEP: return "th-bep";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    static const std::map<std::string, Family> table = {
        {"sip", Family::SIP},       {"sep", Family::SEP},       {"irw", Family::IRW},
        {"bep", Family::BEP},       {"kmp", Family::KMP},       {"th-sip", Family::ThSIP},
        {"th-sep", Family::ThSEP},  {"th-irw", Family::ThIRW},  {"th-bep", Family::ThBEP},
        {"thsip", Family::ThSIP},   {"thsep", Family::ThSEP},   {"thirw", Family::ThIRW},
        {"thbep", Family::ThBEP},
    };
    const auto it = table.find(name);
    if (it == table.end()) throw SpecError("unknown family '" + name + "'");
    return it->second;
}

const BoundaryRates& ModelSpec::rates() const {
    if (const auto* r = std::get_if<BoundaryRates>(&boundary)) return *r;
    throw SpecError("model '" + family_name(family) + "' has no boundary rates");
}

const BoundaryTemperatures& ModelSpec::temperatures() const {
    if (const auto* t = std::get_if<BoundaryTemperatures>(&boundary)) return *t;
    throw SpecError("model '" + family_name(family) + "' has no boundary temperatures");
}

const ModelSpec& validate(const ModelSpec& spec) {
    if (spec.L < 1) throw SpecError("L must be a positive integer");
    if (has_shape(spec.family)) {
        if (!(spec.shape > 0.0)) throw SpecError("shape parameter must be positive");
        if (is_sep_type(spec.family) &&
            std::fabs(spec.shape - std::round(spec.shape)) > 1e-12)
            throw SpecError("2j must be integer for exclusion families");
    }
    if (spec.bulk_only()) return spec;

    if (is_energy(spec.family)) {
        const auto& t = std::get_if<BoundaryTemperatures>(&spec.boundary);
        if (!t) throw SpecError("energy family requires temperatures T_a, T_b");
        if (!(t->Ta > 0.0 && t->Tb > 0.0)) throw SpecError("temperatures must be positive");
        return spec;
    }

    const auto* r = std::get_if<BoundaryRates>(&spec.boundary);
    if (!r) throw SpecError("particle family requires boundary rates alpha, gamma, delta, beta");
    if (!(r->alpha > 0.0 && r->gamma > 0.0 && r->delta > 0.0 && r->beta > 0.0))
        throw SpecError("boundary rates must be strictly positive");
    if (spec.family == Family::SIP || spec.family == Family::ThSIP) {
        if (!(r->gamma > r->alpha)) throw SpecError("inclusion reservoirs require gamma > alpha");
        if (!(r->beta > r->delta)) throw SpecError("inclusion reservoirs require beta > delta");
    }
    return spec;
}

ReservoirDensities reservoir_densities(const ModelSpec& spec) {
    validate(spec);
    if (spec.bulk_only()) throw SpecError("bulk-only model has no reservoir densities");
    switch (spec.family) {
        case Family::SIP:
        case Family::ThSIP: {
            const auto& r = spec.rates();
            return {spec.shape * r.alpha / (r.gamma - r.alpha),
                    spec.shape * r.delta / (r.beta - r.delta)};
        }
        case Family::SEP:
        case Family::ThSEP: {
            const auto& r = spec.rates();
            return {spec.shape * r.alpha / (r.gamma + r.alpha),
                    spec.shape * r.delta / (r.beta + r.delta)};
        }
        case Family::IRW:
        case Family::ThIRW: {
            const auto& r = spec.rates();
            return {r.alpha / r.gamma, r.delta / r.beta};
        }
        case Family::BEP:
        case Family::ThBEP: {
            const auto& t = spec.temperatures();
            return {2.0 * spec.shape * t.Ta, 2.0 * spec.shape * t.Tb};  // 4k T
        }
        case Family::KMP: {
            const auto& t = spec.temperatures();
            return {t.Ta, t.Tb};
        }
    }
    throw SpecError("unreachable");
}

double EquilibriumMarginal::pmf(int n) const {
    if (n < 0) return 0.0;
    switch (kind) {
        case Kind::NegativeBinomial:
            return std::exp(std::lgamma(shape + n) - std::lgamma(shape) - std::lgamma(n + 1.0) +
                            n * std::log(param) + shape * std::log1p(-param));
        case Kind::Binomial: {
            const int m = static_cast<int>(std::round(shape));
            if (n > m) return 0.0;
            return std::exp(log_binomial(m, n) + n * std::log(param) +
                            (m - n) * std::log1p(-param));
        }
        case Kind::Poisson:
            return std::exp(n * std::log(param) - param - std::lgamma(n + 1.0));
        case Kind::Gamma: throw SpecError("pmf undefined for a continuous marginal");
    }
    return 0.0;
}

double EquilibriumMarginal::density(double z) const {
    if (kind != Kind::Gamma) throw SpecError("density defined only for the Gamma marginal");
    if (z < 0.0) return 0.0;
    return std::exp((shape - 1.0) * std::log(z) - z / param - std::lgamma(shape) -
                    shape * std::log(param));
}

double EquilibriumMarginal::mean() const {
    switch (kind) {
        case Kind::NegativeBinomial: return shape * param / (1.0 - param);
        case Kind::Binomial: return shape * param;
        case Kind::Poisson: return param;
        case Kind::Gamma: return shape * param;
    }
    return 0.0;
}

double EquilibriumMarginal::variance() const {
    switch (kind) {
        case Kind::NegativeBinomial: return shape * param / sqr(1.0 - param);
        case Kind::Binomial: return shape * param * (1.0 - param);
        case Kind::Poisson: return param;
        case Kind::Gamma: return shape * param * param;
    }
    return 0.0;
}

int EquilibriumMarginal::support_cap(double tail) const {
    if (kind == Kind::Binomial) return static_cast<int>(std::round(shape));
    if (kind == Kind::Gamma) throw SpecError("support cap undefined for the Gamma marginal");
    int cap = 8;
    for (;;) {
        double mass = 0.0;
        for (int n = 0; n <= cap; ++n) mass += pmf(n);
        if (1.0 - mass < tail) return cap;
        if (cap > (1 << 22)) throw SpecError("support cap search did not converge");
        cap *= 2;
    }
}

EquilibriumMarginal bulk_marginal(Family family, double shape, double parameter) {
    switch (family) {
        case Family::SIP:
        case Family::ThSIP:
            return {EquilibriumMarginal::Kind::NegativeBinomial, shape, parameter};
        case Family::SEP:
        case Family::ThSEP: return {EquilibriumMarginal::Kind::Binomial, shape, parameter};
        case Family::IRW:
        case Family::ThIRW: return {EquilibriumMarginal::Kind::Poisson, 0.0, parameter};
        case Family::BEP:
        case Family::ThBEP: return {EquilibriumMarginal::Kind::Gamma, shape, parameter};
        case Family::KMP: return {EquilibriumMarginal::Kind::Gamma, 1.0, parameter};
    }
    throw SpecError("unreachable");
}

EquilibriumMarginal equilibrium_marginal(const ModelSpec& spec) {
    validate(spec);
    if (is_energy(spec.family)) {
        const auto& t = spec.temperatures();
        if (std::fabs(t.Ta - t.Tb) > 1e-12 * std::max(t.Ta, t.Tb))
            throw SpecError("not at equilibrium: T_a != T_b");
        // Gamma(2k, 2T); the KMP baths are exponential with mean T.
        const double scale = spec.family == Family::KMP ? t.Ta : 2.0 * t.Ta;
        return bulk_marginal(spec.family, spec.shape, scale);
    }
    const auto& r = spec.rates();
    const double imbalance = r.alpha * r.beta - r.gamma * r.delta;
    if (std::fabs(imbalance) > 1e-12 * (r.alpha * r.beta + r.gamma * r.delta))
        throw SpecError("not at equilibrium: alpha*beta != gamma*delta");
    switch (spec.family) {
        case Family::SIP:
        case Family::ThSIP: return bulk_marginal(spec.family, spec.shape, r.alpha / r.gamma);
        case Family::SEP:
        case Family::ThSEP:
            return bulk_marginal(spec.family, spec.shape, r.alpha / (r.gamma + r.alpha));
        default: return bulk_marginal(spec.family, spec.shape, r.alpha / r.gamma);
    }
}

std::string write_config(const ModelSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    out << "family = " << family_name(spec.family) << "\n";
    out << "L = " << spec.L << "\n";
    if (has_shape(spec.family)) out << "shape = " << spec.shape << "\n";
    if (const auto* r = std::get_if<BoundaryRates>(&spec.boundary)) {
        out << "alpha = " << r->alpha << "\n";
        out << "gamma = " << r->gamma << "\n";
        out << "delta = " << r->delta << "\n";
        out << "beta = " << r->beta << "\n";
    } else if (const auto* t = std::get_if<BoundaryTemperatures>(&spec.boundary)) {
        out << "T_a = " << t->Ta << "\n";
        out << "T_b = " << t->Tb << "\n";
    }
    return out.str();
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ModelSpec parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SpecError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw SpecError("config line " + std::to_string(lineno) + ": empty key or value");
        kv[key] = value;
    }

    auto number = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw SpecError("config field '" + key + "' is missing");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(it->second, &used);
        } catch (const std::exception&) {
            throw SpecError("config field '" + key + "': not a number");
        }
        if (used != it->second.size())
            throw SpecError("config field '" + key + "': not a number");
        return v;
    };

    ModelSpec spec;
    if (!kv.count("family")) throw SpecError("config field 'family' is missing");
    spec.family = family_from_name(kv.at("family"));
    spec.L = static_cast<int>(number("L"));
    if (has_shape(spec.family)) spec.shape = number("shape");
    if (is_energy(spec.family)) {
        spec.boundary = BoundaryTemperatures{number("T_a"), number("T_b")};
    } else {
        spec.boundary =
            BoundaryRates{number("alpha"), number("gamma"), number("delta"), number("beta")};
    }
    validate(spec);
    return spec;
}

}  // namespace transport
