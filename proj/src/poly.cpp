#include "transport/poly.hpp"

#include <cmath>
#include <stdexcept>

namespace transport {

namespace {
constexpr double kDropEps = 0.0;  // keep exact zeros out, everything else in
}

Poly Poly::monomial(std::vector<int> exponents, double coeff) {
    Poly p(static_cast<int>(exponents.size()));
    p.add_term(exponents, coeff);
    return p;
}

void Poly::add_term(const std::vector<int>& exponents, double coeff) {
    if (coeff == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(exponents, coeff);
    if (!inserted) {
        it->second += coeff;
        if (std::fabs(it->second) <= kDropEps) terms_.erase(it);
    }
}

Poly Poly::operator+(const Poly& other) const {
    Poly out = *this;
    for (const auto& [mono, c] : other.terms_) out.add_term(mono, c);
    return out;
}

Poly Poly::operator-(const Poly& other) const {
    Poly out = *this;
    for (const auto& [mono, c] : other.terms_) out.add_term(mono, -c);
    return out;
}

Poly Poly::scaled(double factor) const {
    Poly out(nvars_);
    for (const auto& [mono, c] : terms_) out.add_term(mono, c * factor);
    return out;
}

Poly Poly::derivative(int var) const {
    Poly out(nvars_);
    for (const auto& [mono, c] : terms_) {
        if (mono[var] == 0) continue;
        auto reduced = mono;
        reduced[var] -= 1;
        out.add_term(reduced, c * mono[var]);
    }
    return out;
}

Poly Poly::times_var(int var) const {
    Poly out(nvars_);
    for (const auto& [mono, c] : terms_) {
        auto raised = mono;
        raised[var] += 1;
        out.add_term(raised, c);
    }
    return out;
}

double Poly::eval(const std::vector<double>& z) const {
    double acc = 0.0;
    for (const auto& [mono, c] : terms_) {
        double term = c;
        for (int i = 0; i < nvars_; ++i)
            for (int p = 0; p < mono[i]; ++p) term *= z[i];
        acc += term;
    }
    return acc;
}

double Poly::max_abs_coeff() const {
    double worst = 0.0;
    for (const auto& [mono, c] : terms_) worst = std::max(worst, std::fabs(c));
    return worst;
}

Poly bep_generator_apply(const ModelSpec& spec, const Poly& f) {
    if (spec.family != Family::BEP)
        throw SpecError("bep_generator_apply: expected the energy diffusion family");
    const int L = spec.L;
    const double k2 = spec.shape;  // 2k
    Poly out(L);

    for (int i = 0; i + 1 < L; ++i) {
        const Poly diff = f.derivative(i) - f.derivative(i + 1);
        const Poly second = diff.derivative(i) - diff.derivative(i + 1);
        // z_i z_{i+1} (d_i - d_{i+1})^2 f
        out = out + second.times_var(i).times_var(i + 1);
        // -2k (z_i - z_{i+1}) (d_i - d_{i+1}) f
        out = out + (diff.times_var(i) - diff.times_var(i + 1)).scaled(-k2);
    }
    if (!spec.bulk_only()) {
        const auto& t = spec.temperatures();
        for (const bool left : {true, false}) {
            const int site = left ? 0 : L - 1;
            const double temp = left ? t.Ta : t.Tb;
            const Poly d1 = f.derivative(site);
            const Poly d2 = d1.derivative(site);
            out = out + d1.scaled(k2 * temp);            // 2k T d/dz
            out = out + d2.times_var(site).scaled(temp); // T z d^2/dz^2
            out = out + d1.times_var(site).scaled(-0.5); // -z/2 d/dz
        }
    }
    return out;
}

}  // namespace transport
