#include "transport/duality.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "transport/poly.hpp"
#include "transport/rng.hpp"
#include "transport/special.hpp"

namespace transport {

namespace {

double bulk_arrival_factor(Family bulk_family, double shape, int n) {
    switch (bulk_family) {
        case Family::SIP:
        case Family::BEP: return shape + n;
        case Family::SEP: return shape - n;
        case Family::IRW: return 1.0;
        default: throw SpecError("bulk_arrival_factor: unexpected family");
    }
}

int sep_site_cap(const ModelSpec& spec) {
    return is_sep_type(spec.family) ? static_cast<int>(std::round(spec.shape)) : -1;
}

// Site factor of the duality function for the discrete families.
double site_factor(const ModelSpec& spec, int eta, int xi) {
    switch (spec.family) {
        case Family::SIP:
        case Family::ThSIP: return falling_factorial(eta, xi) / rising_factorial(spec.shape, xi);
        case Family::SEP:
        case Family::ThSEP: {
            const int j2 = static_cast<int>(std::round(spec.shape));
            if (xi > j2) return 0.0;
            return falling_factorial(eta, xi) / falling_factorial(j2, xi);
        }
        case Family::IRW:
        case Family::ThIRW: return falling_factorial(eta, xi);
        default: throw SpecError("site_factor: not a discrete family");
    }
}

double site_factor_energy(const ModelSpec& spec, double z, int xi) {
    if (spec.family == Family::KMP)
        return std::pow(z, xi) / std::tgamma(static_cast<double>(xi) + 1.0);
    return std::pow(z, xi) / rising_factorial(spec.shape, xi);
}

}  // namespace

DualModel dual_model(const ModelSpec& spec) {
    validate(spec);
    const auto rates = dual_walker_rates(spec);
    DualModel dual;
    dual.L = spec.L;
    dual.shape = spec.shape;
    dual.absorb_left = rates.u;
    dual.absorb_right = rates.v;
    dual.redistributing = is_thermalized(spec.family);
    dual.kernel = bond_kernel(spec.family, spec.shape);
    switch (spec.family) {
        case Family::SIP:
        case Family::BEP: dual.bulk_family = Family::SIP; break;
        case Family::SEP: dual.bulk_family = Family::SEP; break;
        case Family::IRW: dual.bulk_family = Family::IRW; break;
        case Family::ThSIP:
        case Family::ThBEP:
        case Family::KMP: dual.bulk_family = Family::ThSIP; break;
        case Family::ThSEP: dual.bulk_family = Family::ThSEP; break;
        case Family::ThIRW: dual.bulk_family = Family::ThIRW; break;
    }
    return dual;
}

DualWalkerRates dual_walker_rates(const ModelSpec& spec) {
    validate(spec);
    if (is_thermalized(spec.family)) return {2.0, 1.0, 1.0};
    switch (spec.family) {
        case Family::SIP: {
            const auto& r = spec.rates();
            return {1.0 / spec.shape, r.gamma - r.alpha, r.beta - r.delta};
        }
        case Family::SEP: {
            const auto& r = spec.rates();
            return {1.0 / spec.shape, r.gamma + r.alpha, r.beta + r.delta};
        }
        case Family::IRW: {
            const auto& r = spec.rates();
            return {1.0, r.gamma, r.beta};
        }
        case Family::BEP: return {1.0 / spec.shape, 0.5, 0.5};
        default: throw SpecError("unreachable");
    }
}

std::pair<double, double> duality_weights(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::SIP:
        case Family::ThSIP: {
            const auto& r = spec.rates();
            return {r.alpha / (r.gamma - r.alpha), r.delta / (r.beta - r.delta)};
        }
        case Family::SEP:
        case Family::ThSEP: {
            const auto& r = spec.rates();
            return {r.alpha / (r.gamma + r.alpha), r.delta / (r.beta + r.delta)};
        }
        case Family::IRW:
        case Family::ThIRW: {
            const auto& r = spec.rates();
            return {r.alpha / r.gamma, r.delta / r.beta};
        }
        case Family::BEP:
        case Family::ThBEP: {
            const auto& t = spec.temperatures();
            return {2.0 * t.Ta, 2.0 * t.Tb};
        }
        case Family::KMP: {
            const auto& t = spec.temperatures();
            return {t.Ta, t.Tb};
        }
    }
    throw SpecError("unreachable");
}

double duality_site_scale(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::SIP:
        case Family::ThSIP:
        case Family::BEP:
        case Family::ThBEP: return 1.0 / spec.shape;
        case Family::SEP:
        case Family::ThSEP: return 1.0 / spec.shape;
        case Family::IRW:
        case Family::ThIRW:
        case Family::KMP: return 1.0;
    }
    throw SpecError("unreachable");
}

double duality_eval(const ModelSpec& spec, const Config& eta, const DualConfig& xi) {
    if (static_cast<int>(eta.size()) != spec.L || static_cast<int>(xi.size()) != spec.L + 2)
        throw std::invalid_argument("duality_eval: dimension mismatch");
    const auto [wa, wb] = duality_weights(spec);
    double d = std::pow(wa, xi.front()) * std::pow(wb, xi.back());
    for (int i = 0; i < spec.L && d != 0.0; ++i) d *= site_factor(spec, eta[i], xi[i + 1]);
    return d;
}

double duality_eval_energy(const ModelSpec& spec, const std::vector<double>& z,
                           const DualConfig& xi) {
    if (static_cast<int>(z.size()) != spec.L || static_cast<int>(xi.size()) != spec.L + 2)
        throw std::invalid_argument("duality_eval_energy: dimension mismatch");
    const auto [wa, wb] = duality_weights(spec);
    double d = std::pow(wa, xi.front()) * std::pow(wb, xi.back());
    for (int i = 0; i < spec.L; ++i) d *= site_factor_energy(spec, z[i], xi[i + 1]);
    return d;
}

void dual_transitions(const ModelSpec& spec, const DualConfig& xi,
                      const std::function<void(const DualConfig&, double)>& emit) {
    const auto dual = dual_model(spec);
    const int L = dual.L;
    DualConfig work = xi;

    if (!dual.redistributing) {
        auto hop = [&](int from, int to) {
            if (xi[from] == 0) return;
            double factor = bulk_arrival_factor(dual.bulk_family, dual.shape, xi[to]);
            if (factor <= 0.0) return;
            work[from] -= 1;
            work[to] += 1;
            emit(work, xi[from] * factor);
            work[from] += 1;
            work[to] -= 1;
        };
        for (int i = 1; i < L; ++i) {
            hop(i, i + 1);
            hop(i + 1, i);
        }
        if (xi[1] > 0) {
            work[1] -= 1;
            work[0] += 1;
            emit(work, dual.absorb_left * xi[1]);
            work[1] += 1;
            work[0] -= 1;
        }
        if (xi[L] > 0) {
            work[L] -= 1;
            work[L + 1] += 1;
            emit(work, dual.absorb_right * xi[L]);
            work[L] += 1;
            work[L + 1] -= 1;
        }
        return;
    }

    for (int i = 1; i < L; ++i) {
        const int total = xi[i] + xi[i + 1];
        if (total == 0) continue;
        const auto pmf = dual.kernel.pmf(total);
        for (int r = 0; r <= total; ++r) {
            if (r == xi[i] || pmf[r] == 0.0) continue;
            work[i] = r;
            work[i + 1] = total - r;
            emit(work, pmf[r]);
        }
        work[i] = xi[i];
        work[i + 1] = xi[i + 1];
    }
    if (xi[1] > 0) {
        work[0] += xi[1];
        work[1] = 0;
        emit(work, dual.absorb_left);
        work[0] = xi[0];
        work[1] = xi[1];
    }
    if (xi[L] > 0) {
        work[L + 1] += xi[L];
        work[L] = 0;
        emit(work, dual.absorb_right);
        work[L + 1] = xi[L + 1];
        work[L] = xi[L];
    }
}

std::vector<double> single_walker_absorption(const ModelSpec& spec) {
    const auto r = dual_walker_rates(spec);
    const int L = spec.L;
    std::vector<double> p(static_cast<std::size_t>(L) + 2);
    const double denom = L + 1.0 / (r.c * r.u) + 1.0 / (r.c * r.v) - 1.0;
    p[0] = 1.0;
    for (int i = 1; i <= L; ++i) p[i] = (L + 1.0 / (r.c * r.v) - i) / denom;
    p[L + 1] = 0.0;
    return p;
}

std::vector<double> single_walker_absorption_system(const ModelSpec& spec) {
    const auto r = dual_walker_rates(spec);
    const int L = spec.L;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(L, L);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(L);
    const double cu = r.c * r.u;
    const double cv = r.c * r.v;
    if (L == 1) {
        // both absorption channels compete directly
        a(0, 0) = cu + cv;
        b(0) = cu;
    } else {
        a(0, 0) = cu + 1.0;
        a(0, 1) = -1.0;
        b(0) = cu;
        for (int i = 1; i + 1 < L; ++i) {
            a(i, i - 1) = 1.0;
            a(i, i) = -2.0;
            a(i, i + 1) = 1.0;
        }
        a(L - 1, L - 1) = cv + 1.0;
        a(L - 1, L - 2) = -1.0;
    }
    const Eigen::VectorXd sol = a.fullPivLu().solve(b);
    std::vector<double> p(static_cast<std::size_t>(L) + 2);
    p[0] = 1.0;
    for (int i = 0; i < L; ++i) p[i + 1] = sol[i];
    p[L + 1] = 0.0;
    return p;
}

namespace {

void enumerate_sector(const ModelSpec& spec, int slot, int remaining, DualConfig& xi,
                      std::vector<DualConfig>& out, std::size_t budget) {
    const int L = spec.L;
    if (slot == L + 2) {
        if (remaining == 0) {
            if (out.size() >= budget)
                throw SpecError("dual sector exceeds the state budget");
            out.push_back(xi);
        }
        return;
    }
    int cap = remaining;
    if (slot >= 1 && slot <= L) {
        const int sc = sep_site_cap(spec);
        if (sc >= 0) cap = std::min(cap, sc);
    }
    for (int v = 0; v <= cap; ++v) {
        xi[slot] = v;
        enumerate_sector(spec, slot + 1, remaining - v, xi, out, budget);
    }
    xi[slot] = 0;
}

int bulk_mass(const DualConfig& xi) {
    int m = 0;
    for (std::size_t i = 1; i + 1 < xi.size(); ++i) m += xi[i];
    return m;
}

}  // namespace

DualSector build_dual_sector(const ModelSpec& spec, int total, std::size_t state_budget) {
    validate(spec);
    DualSector sector;
    DualConfig xi(static_cast<std::size_t>(spec.L) + 2, 0);
    enumerate_sector(spec, 0, total, xi, sector.states, state_budget);
    for (std::size_t s = 0; s < sector.states.size(); ++s)
        sector.index.emplace(sector.states[s], static_cast<int>(s));

    const auto n = static_cast<Eigen::Index>(sector.states.size());
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t s = 0; s < sector.states.size(); ++s) {
        double outflow = 0.0;
        dual_transitions(spec, sector.states[s], [&](const DualConfig& to, double rate) {
            triplets.emplace_back(static_cast<int>(s), sector.index.at(to), rate);
            outflow += rate;
        });
        triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), -outflow);
    }
    sector.rates.resize(n, n);
    sector.rates.setFromTriplets(triplets.begin(), triplets.end());
    sector.rates.makeCompressed();
    return sector;
}

AbsorptionTable absorption_table_exact(const ModelSpec& spec, const DualConfig& xi,
                                       std::size_t state_budget) {
    const int total = dual_total(xi);
    const auto sector = build_dual_sector(spec, total, state_budget);

    std::vector<int> transient_of(sector.states.size(), -1);
    std::vector<int> transient_states;
    for (std::size_t s = 0; s < sector.states.size(); ++s) {
        if (bulk_mass(sector.states[s]) > 0) {
            transient_of[s] = static_cast<int>(transient_states.size());
            transient_states.push_back(static_cast<int>(s));
        }
    }

    AbsorptionTable table;
    table.probability.assign(static_cast<std::size_t>(total) + 1, 0.0);
    table.std_error.assign(static_cast<std::size_t>(total) + 1, 0.0);
    if (bulk_mass(xi) == 0) {
        table.probability[xi.front()] = 1.0;
        return table;
    }

    const auto nt = static_cast<Eigen::Index>(transient_states.size());
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nt, total + 1);
    for (Eigen::Index row = 0; row < nt; ++row) {
        const int s = transient_states[row];
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sector.rates, s); it;
             ++it) {
            const int target = static_cast<int>(it.col());
            if (target == s) {
                triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), it.value());
            } else if (transient_of[target] >= 0) {
                triplets.emplace_back(static_cast<int>(row), transient_of[target], it.value());
            } else {
                rhs(row, sector.states[target].front()) -= it.value();
            }
        }
    }
    Eigen::SparseMatrix<double> a(nt, nt);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("absorption_table_exact: factorization failed");
    const Eigen::MatrixXd h = lu.solve(rhs);

    const int row = transient_of[sector.index.at(xi)];
    for (int m = 0; m <= total; ++m) table.probability[m] = h(row, m);
    return table;
}

AbsorptionTable absorption_table_mc(const ModelSpec& spec, const DualConfig& xi, int runs,
                                    std::uint64_t seed) {
    const int total = dual_total(xi);
    AbsorptionTable table;
    table.probability.assign(static_cast<std::size_t>(total) + 1, 0.0);
    table.std_error.assign(static_cast<std::size_t>(total) + 1, 0.0);
    Rng rng(seed);
    std::vector<DualConfig> targets;
    std::vector<double> rates;
    for (int run = 0; run < runs; ++run) {
        DualConfig state = xi;
        while (bulk_mass(state) > 0) {
            targets.clear();
            rates.clear();
            double outflow = 0.0;
            dual_transitions(spec, state, [&](const DualConfig& to, double rate) {
                targets.push_back(to);
                rates.push_back(rate);
                outflow += rate;
            });
            const std::size_t pick = rng.weighted_index(rates, outflow);
            state = targets[pick];
        }
        table.probability[state.front()] += 1.0;
    }
    for (int m = 0; m <= total; ++m) {
        const double p = table.probability[m] / runs;
        table.probability[m] = p;
        table.std_error[m] = std::sqrt(std::max(0.0, p * (1.0 - p) / runs));
    }
    return table;
}

double stationary_expectation(const ModelSpec& spec, const DualConfig& xi,
                              const AbsorptionTable& table) {
    const auto [wa, wb] = duality_weights(spec);
    const int total = dual_total(xi);
    double acc = 0.0;
    for (int m = 0; m <= total; ++m)
        acc += std::pow(wa, m) * std::pow(wb, total - m) * table.probability[m];
    return acc;
}

double stationary_expectation(const ModelSpec& spec, const DualConfig& xi) {
    return stationary_expectation(spec, xi, absorption_table_exact(spec, xi));
}

Eigen::VectorXd semigroup_apply(const Eigen::SparseMatrix<double, Eigen::RowMajor>& q,
                                Eigen::VectorXd v, double t) {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: negative time");
    double lambda = 0.0;
    for (int i = 0; i < q.rows(); ++i) lambda = std::max(lambda, -q.coeff(i, i));
    if (lambda == 0.0 || t == 0.0) return v;
    lambda *= 1.0000001;

    double remaining = t;
    while (remaining > 0.0) {
        // Poisson weights at this chunk size stay far from underflow
        const double dt = std::min(remaining, 400.0 / lambda);
        remaining -= dt;
        const double a = lambda * dt;
        // v <- e^{dt Q} v = sum_m Pois(a)(m) P^m v with P = I + Q/lambda
        Eigen::VectorXd term = v;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(v.size());
        double weight = std::exp(-a);
        double cumulative = 0.0;
        for (int m = 0;; ++m) {
            if (m > 0) {
                term = term + (q * term) / lambda;
                weight *= a / m;
            }
            acc += weight * term;
            cumulative += weight;
            if (m > a && (weight < 1e-18 || 1.0 - cumulative < 1e-15)) break;
            if (m > 20000)
                throw std::runtime_error("semigroup_apply: series did not converge");
        }
        v = acc;
    }
    return v;
}

namespace {

double moment_evolution_impl(const ModelSpec& spec, const DualConfig& xi0, double t,
                             const std::function<double(const DualConfig&)>& d0) {
    const auto sector = build_dual_sector(spec, dual_total(xi0));
    Eigen::VectorXd g(static_cast<Eigen::Index>(sector.states.size()));
    for (std::size_t s = 0; s < sector.states.size(); ++s)
        g[static_cast<Eigen::Index>(s)] = d0(sector.states[s]);
    g = semigroup_apply(sector.rates, std::move(g), t);
    return g[sector.index.at(xi0)];
}

}  // namespace

double moment_evolution(const ModelSpec& spec, const Config& eta, const DualConfig& xi0,
                        double t) {
    return moment_evolution_impl(spec, xi0, t,
                                 [&](const DualConfig& xi) { return duality_eval(spec, eta, xi); });
}

double moment_evolution_energy(const ModelSpec& spec, const std::vector<double>& z,
                               const DualConfig& xi0, double t) {
    return moment_evolution_impl(
        spec, xi0, t, [&](const DualConfig& xi) { return duality_eval_energy(spec, z, xi); });
}

namespace {

// [L_dual D(eta-or-z, .)](xi), exact.
double dual_side(const ModelSpec& spec, const std::function<double(const DualConfig&)>& d,
                 const DualConfig& xi) {
    const double here = d(xi);
    double acc = 0.0;
    dual_transitions(spec, xi,
                     [&](const DualConfig& to, double rate) { acc += rate * (d(to) - here); });
    return acc;
}

}  // namespace

double duality_identity_residual(const ModelSpec& spec, const Config& eta,
                                 const DualConfig& xi) {
    if (!is_discrete(spec.family))
        throw SpecError("duality_identity_residual: use the energy variant");
    const double here = duality_eval(spec, eta, xi);
    double forward = 0.0;

    if (!is_thermalized(spec.family)) {
        int cap = 0;
        for (int v : eta) cap = std::max(cap, v);
        enumerate_transitions(spec, eta, cap + 1, [&](const Config& to, double rate) {
            forward += rate * (duality_eval(spec, to, xi) - here);
        });
    } else {
        // Bond clocks have finite outcome lists; reservoir resampling enters
        // through the closed-form factorial moments of the bath marginals,
        // which collapse to w^(xi at the site).
        const auto kernel = bond_kernel(spec.family, spec.shape);
        Config work = eta;
        for (int i = 0; i + 1 < spec.L; ++i) {
            const int total = eta[i] + eta[i + 1];
            const auto pmf = kernel.pmf(total);
            for (int r = 0; r <= total; ++r) {
                if (r == eta[i] || pmf[r] == 0.0) continue;
                work[i] = r;
                work[i + 1] = total - r;
                forward += pmf[r] * (duality_eval(spec, work, xi) - here);
            }
            work[i] = eta[i];
            work[i + 1] = eta[i + 1];
        }
        const auto [wa, wb] = duality_weights(spec);
        for (const bool left : {true, false}) {
            const int site = left ? 0 : spec.L - 1;
            const double w = left ? wa : wb;
            double rest = std::pow(wa, xi.front()) * std::pow(wb, xi.back());
            for (int j = 0; j < spec.L; ++j)
                if (j != site) rest *= site_factor(spec, eta[j], xi[j + 1]);
            forward += rest * (std::pow(w, xi[site + 1]) -
                               site_factor(spec, eta[site], xi[site + 1]));
        }
    }

    const double dual =
        dual_side(spec, [&](const DualConfig& x) { return duality_eval(spec, eta, x); }, xi);
    return std::fabs(forward - dual);
}

double duality_identity_residual_energy(const ModelSpec& spec, const std::vector<double>& z,
                                        const DualConfig& xi) {
    if (is_discrete(spec.family))
        throw SpecError("duality_identity_residual_energy: use the discrete variant");

    const auto d = [&](const DualConfig& x) { return duality_eval_energy(spec, z, x); };

    if (spec.family == Family::BEP) {
        // Symbolic route: both generator applications are polynomials in z.
        const auto [wa, wb] = duality_weights(spec);
        auto d_poly = [&](const DualConfig& x) {
            double coeff = std::pow(wa, x.front()) * std::pow(wb, x.back());
            std::vector<int> expo(static_cast<std::size_t>(spec.L), 0);
            for (int i = 0; i < spec.L; ++i) {
                expo[i] = x[i + 1];
                coeff /= rising_factorial(spec.shape, x[i + 1]);
            }
            return Poly::monomial(expo, coeff);
        };
        const Poly forward = bep_generator_apply(spec, d_poly(xi));
        Poly dual(spec.L);
        const Poly here = d_poly(xi);
        dual_transitions(spec, xi, [&](const DualConfig& to, double rate) {
            dual = dual + (d_poly(to) - here).scaled(rate);
        });
        return (forward - dual).max_abs_coeff();
    }

    // KMP / thermalized energy model: bond and bath expectations in closed form.
    const double gamma4 = spec.family == Family::KMP ? 2.0 : 2.0 * spec.shape;
    double forward = 0.0;
    const auto [wa, wb] = duality_weights(spec);
    auto factors = [&](int skip_a, int skip_b) {
        double rest = std::pow(wa, xi.front()) * std::pow(wb, xi.back());
        for (int j = 0; j < spec.L; ++j)
            if (j != skip_a && j != skip_b) rest *= site_factor_energy(spec, z[j], xi[j + 1]);
        return rest;
    };
    for (int i = 0; i + 1 < spec.L; ++i) {
        const int a = xi[i + 1], b = xi[i + 2];
        const double total = z[i] + z[i + 1];
        const double mixed = std::pow(total, a + b) / rising_factorial(gamma4, a + b);
        const double rest = factors(i, i + 1);
        forward += rest * (mixed - site_factor_energy(spec, z[i], a) *
                                       site_factor_energy(spec, z[i + 1], b));
    }
    for (const bool left : {true, false}) {
        const int site = left ? 0 : spec.L - 1;
        const double w = left ? wa : wb;
        const double rest = factors(site, -1);
        forward += rest * (std::pow(w, xi[site + 1]) -
                           site_factor_energy(spec, z[site], xi[site + 1]));
    }
    return std::fabs(forward - dual_side(spec, d, xi));
}

namespace {

void scan_dual_configs(const ModelSpec& spec, int xi_total,
                       const std::function<void(const DualConfig&)>& visit) {
    for (int n = 0; n <= xi_total; ++n) {
        std::vector<DualConfig> states;
        DualConfig xi(static_cast<std::size_t>(spec.L) + 2, 0);
        enumerate_sector(spec, 0, n, xi, states, 1u << 22);
        for (const auto& s : states) visit(s);
    }
}

}  // namespace

double check_duality_identity(const ModelSpec& spec, int eta_cap, int xi_total) {
    validate(spec);
    double worst = 0.0;
    if (spec.family == Family::BEP) {
        std::vector<double> z(static_cast<std::size_t>(spec.L), 1.0);
        scan_dual_configs(spec, xi_total, [&](const DualConfig& xi) {
            worst = std::max(worst, duality_identity_residual_energy(spec, z, xi));
        });
        return worst;
    }
    if (is_energy(spec.family)) {
        const std::vector<double> levels = {0.4, 1.0, 2.3};
        StateSpace grid(spec.L, static_cast<int>(levels.size()) - 1);
        scan_dual_configs(spec, xi_total, [&](const DualConfig& xi) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const Config pick = grid.decode(g);
                std::vector<double> z(static_cast<std::size_t>(spec.L));
                for (int i = 0; i < spec.L; ++i) z[i] = levels[pick[i]];
                worst = std::max(worst, duality_identity_residual_energy(spec, z, xi));
            }
        });
        return worst;
    }

    const int cap = is_sep_type(spec.family)
                        ? std::min(eta_cap, static_cast<int>(std::round(spec.shape)))
                        : eta_cap;
    StateSpace space(spec.L, cap);
    scan_dual_configs(spec, xi_total, [&](const DualConfig& xi) {
        for (std::size_t s = 0; s < space.size(); ++s) {
            const Config eta = space.decode(s);
            worst = std::max(worst, duality_identity_residual(spec, eta, xi));
        }
    });
    return worst;
}

}  // namespace transport
