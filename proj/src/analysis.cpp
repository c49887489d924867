#include "transport/analysis.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "transport/special.hpp"

namespace transport {

std::vector<double> profile_closed_form(const ModelSpec& spec) {
    validate(spec);
    const auto rho = reservoir_densities(spec);
    const auto p = single_walker_absorption(spec);
    std::vector<double> profile(static_cast<std::size_t>(spec.L));
    for (int i = 1; i <= spec.L; ++i)
        profile[i - 1] = rho.rho_a * p[i] + rho.rho_b * (1.0 - p[i]);
    return profile;
}

namespace {

enum class BilinearCase { SepOne, SepTuned, SipTuned, BepQuarter, None };

BilinearCase bilinear_case(const ModelSpec& spec) {
    const double tol = 1e-12;
    switch (spec.family) {
        case Family::SEP: {
            const auto& r = spec.rates();
            if (std::fabs(spec.shape - 1.0) < tol) return BilinearCase::SepOne;
            if (std::fabs(r.gamma + r.alpha - spec.shape) < tol &&
                std::fabs(r.beta + r.delta - spec.shape) < tol)
                return BilinearCase::SepTuned;
            return BilinearCase::None;
        }
        case Family::SIP: {
            const auto& r = spec.rates();
            if (std::fabs(r.gamma - r.alpha - spec.shape) < tol &&
                std::fabs(r.beta - r.delta - spec.shape) < tol)
                return BilinearCase::SipTuned;
            return BilinearCase::None;
        }
        case Family::BEP:
            return std::fabs(spec.shape - 0.5) < tol ? BilinearCase::BepQuarter
                                                     : BilinearCase::None;
        default: return BilinearCase::None;
    }
}

}  // namespace

bool bilinear_covariance_available(const ModelSpec& spec) {
    return bilinear_case(spec) != BilinearCase::None;
}

double covariance_closed_form(const ModelSpec& spec, int i, int l) {
    validate(spec);
    if (!(1 <= i && i < l && l <= spec.L))
        throw std::invalid_argument("covariance_closed_form: need 1 <= i < l <= L");
    const auto rho = reservoir_densities(spec);
    const double gap2 = sqr(rho.rho_a - rho.rho_b);
    const double L = spec.L;
    switch (bilinear_case(spec)) {
        case BilinearCase::SipTuned:
            return i * (L + 1.0 - l) / (sqr(L + 1.0) * (spec.shape * (L + 1.0) + 1.0)) * gap2;
        case BilinearCase::SepTuned:
            return -i * (L + 1.0 - l) / (sqr(L + 1.0) * (spec.shape * (L + 1.0) - 1.0)) * gap2;
        case BilinearCase::SepOne: {
            const auto& r = spec.rates();
            const double a = 1.0 / (r.gamma + r.alpha);
            const double b = 1.0 / (r.beta + r.delta);
            const double span = L + a + b - 1.0;
            return -gap2 * (i + a - 1.0) * (L + b - l) / (sqr(span) * (span - 1.0));
        }
        case BilinearCase::BepQuarter:
            return 2.0 * i * (L + 1.0 - l) / ((L + 3.0) * sqr(L + 1.0)) * gap2;
        case BilinearCase::None:
            throw SpecError("no closed form for these parameters");
    }
    throw SpecError("unreachable");
}

namespace {

class PairIndex {
  public:
    explicit PairIndex(int L) : L_(L) {}
    int operator()(int i, int l) const {  // 1-based, unordered
        if (i > l) std::swap(i, l);
        return (i - 1) * L_ - (i - 1) * i / 2 + (l - 1);
    }
    int size() const { return L_ * (L_ + 1) / 2; }

  private:
    int L_;
};

struct AppendixSystem {
    Eigen::MatrixXd a;
    Eigen::VectorXd rhs;  // equations read a * X = rhs
};

AppendixSystem assemble_particle_system(const ModelSpec& spec,
                                        const std::vector<double>& x) {
    const int L = spec.L;
    const double h = spec.shape / 2.0;  // k or j
    const double s = spec.family == Family::SIP ? 1.0 : -1.0;
    const auto& r = spec.rates();
    const double al = r.alpha, ga = r.gamma, de = r.delta, be = r.beta;
    PairIndex idx(L);
    AppendixSystem sys{Eigen::MatrixXd::Zero(idx.size(), idx.size()),
                       Eigen::VectorXd::Zero(idx.size())};

    for (int i = 1; i <= L; ++i) {
        for (int l = i; l <= L; ++l) {
            const int row = idx(i, l);
            auto X = [&](int a_, int b_) -> double& { return sys.a(row, idx(a_, b_)); };
            double& rhs = sys.rhs(row);
            if (i == l) {
                if (i == 1) {
                    X(1, 1) += 2.0 * (2.0 * h + (ga - s * al));
                    X(1, 2) += -2.0 * (2.0 * h + s);
                    rhs += (2.0 * h * (2.0 * al + 1.0) + ga + s * al) * x[0] +
                           2.0 * h * x[1] + 2.0 * h * al;
                } else if (i == L) {
                    X(L, L) += 2.0 * (2.0 * h + (be - s * de));
                    X(L - 1, L) += -2.0 * (2.0 * h + s);
                    rhs += (2.0 * h * (2.0 * de + 1.0) + be + s * de) * x[L - 1] +
                           2.0 * h * x[L - 2] + 2.0 * h * de;
                } else {
                    X(i - 1, i) += 2.0 * h + s;
                    X(i, i + 1) += 2.0 * h + s;
                    X(i, i) += -4.0 * h;
                    rhs += -h * (x[i - 2] + 2.0 * x[i - 1] + x[i]);
                }
            } else if (i == 1 && l == L) {
                X(1, L) += -(4.0 * h + ga - s * de - s * al + be);
                X(2, L) += 2.0 * h;
                X(1, L - 1) += 2.0 * h;
                rhs += -2.0 * h * (de * x[0] + al * x[L - 1]);
            } else if (i == 1 && l == 2) {
                X(1, 1) += 2.0 * h;
                X(2, 2) += 2.0 * h;
                X(1, 2) += -(2.0 * (3.0 * h + s) + (ga - s * al));
                X(1, 3) += 2.0 * h;
                rhs += 2.0 * h * x[0] + 2.0 * h * (1.0 - al) * x[1];
            } else if (i == L - 1 && l == L) {
                X(L, L) += 2.0 * h;
                X(L - 1, L - 1) += 2.0 * h;
                X(L - 1, L) += -(2.0 * (3.0 * h + s) + (be - s * de));
                X(L - 2, L) += 2.0 * h;
                rhs += 2.0 * h * x[L - 1] + 2.0 * h * (1.0 - de) * x[L - 2];
            } else if (i == 1) {  // 2 < l < L
                X(2, l) += 2.0 * h;
                X(1, l - 1) += 2.0 * h;
                X(1, l + 1) += 2.0 * h;
                X(1, l) += -(6.0 * h - s * al + ga);
                rhs += -2.0 * h * al * x[l - 1];
            } else if (l == L) {  // 1 < i < L-1
                X(i, L - 1) += 2.0 * h;
                X(i + 1, L) += 2.0 * h;
                X(i - 1, L) += 2.0 * h;
                X(i, L) += -(6.0 * h + be - s * de);
                rhs += -2.0 * h * de * x[i - 1];
            } else if (l == i + 1) {  // 1 < i < L-1
                X(i, i) += h;
                X(i + 1, i + 1) += h;
                X(i, i + 1) += -s - 4.0 * h;
                X(i - 1, i + 1) += h;
                X(i, i + 2) += h;
                rhs += h * (x[i - 1] + x[i]);
            } else {  // interior, non-adjacent
                X(i - 1, l) += 1.0;
                X(i + 1, l) += 1.0;
                X(i, l - 1) += 1.0;
                X(i, l + 1) += 1.0;
                X(i, l) += -4.0;
            }
        }
    }
    return sys;
}

AppendixSystem assemble_energy_system(const ModelSpec& spec, const std::vector<double>& x) {
    const int L = spec.L;
    const double K = spec.shape;  // 2k
    const auto& t = spec.temperatures();
    PairIndex idx(L);
    AppendixSystem sys{Eigen::MatrixXd::Zero(idx.size(), idx.size()),
                       Eigen::VectorXd::Zero(idx.size())};

    for (int i = 1; i <= L; ++i) {
        for (int l = i; l <= L; ++l) {
            const int row = idx(i, l);
            auto X = [&](int a_, int b_) -> double& { return sys.a(row, idx(a_, b_)); };
            double& rhs = sys.rhs(row);
            if (i == l) {
                if (i == 1) {
                    X(1, 2) += 2.0 * (K + 1.0);
                    X(1, 1) += -(2.0 * K + 1.0);
                    rhs += -2.0 * (K + 1.0) * t.Ta * x[0];
                } else if (i == L) {
                    X(L - 1, L) += 2.0 * (K + 1.0);
                    X(L, L) += -(2.0 * K + 1.0);
                    rhs += -2.0 * (K + 1.0) * t.Tb * x[L - 1];
                } else {
                    X(i - 1, i) += K + 1.0;
                    X(i, i + 1) += K + 1.0;
                    X(i, i) += -2.0 * K;
                }
            } else if (i == 1 && l == L) {
                X(1, L) += -2.0 * (1.0 + 2.0 * K);
                X(2, L) += 2.0 * K;
                X(1, L - 1) += 2.0 * K;
                rhs += -2.0 * K * (t.Ta * x[L - 1] + t.Tb * x[0]);
            } else if (i == 1 && l == 2) {
                X(1, 1) += 2.0 * K;
                X(2, 2) += 2.0 * K;
                X(1, 2) += -(6.0 * K + 5.0);
                X(1, 3) += 2.0 * K;
                rhs += -2.0 * K * t.Ta * x[1];
            } else if (i == L - 1 && l == L) {
                X(L, L) += 2.0 * K;
                X(L - 1, L - 1) += 2.0 * K;
                X(L - 1, L) += -(6.0 * K + 5.0);
                X(L - 2, L) += 2.0 * K;
                rhs += -2.0 * K * t.Tb * x[L - 2];
            } else if (i == 1) {
                X(1, l - 1) += 2.0 * K;
                X(1, l + 1) += 2.0 * K;
                X(2, l) += 2.0 * K;
                X(1, l) += -(1.0 + 6.0 * K);
                rhs += -2.0 * K * t.Ta * x[l - 1];
            } else if (l == L) {
                X(i - 1, L) += 2.0 * K;
                X(i + 1, L) += 2.0 * K;
                X(i, L - 1) += 2.0 * K;
                X(i, L) += -(6.0 * K + 1.0);
                rhs += -2.0 * K * t.Tb * x[i - 1];
            } else if (l == i + 1) {
                X(i, i) += K;
                X(i + 1, i + 1) += K;
                X(i, i + 1) += -2.0 * (2.0 * K + 1.0);
                X(i - 1, i + 1) += K;
                X(i, i + 2) += K;
            } else {
                X(i - 1, l) += 1.0;
                X(i + 1, l) += 1.0;
                X(i, l - 1) += 1.0;
                X(i, l + 1) += 1.0;
                X(i, l) += -4.0;
            }
        }
    }
    return sys;
}

AppendixSystem assemble_system(const ModelSpec& spec, const std::vector<double>& x) {
    if (spec.family == Family::SIP || spec.family == Family::SEP)
        return assemble_particle_system(spec, x);
    if (spec.family == Family::BEP) return assemble_energy_system(spec, x);
    throw SpecError("two-point system available for the SIP/SEP/BEP families only");
}

}  // namespace

CorrelationSolution solve_appendix_system(const ModelSpec& spec) {
    validate(spec);
    if (spec.L < 3) throw SpecError("two-point system requires L >= 3");
    CorrelationSolution out;
    out.L = spec.L;
    out.profile = profile_closed_form(spec);
    const auto sys = assemble_system(spec, out.profile);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.a);
    if (!lu.isInvertible()) throw std::runtime_error("two-point system is singular");
    const Eigen::VectorXd sol = lu.solve(sys.rhs);

    PairIndex idx(spec.L);
    out.second.resize(spec.L, spec.L);
    for (int i = 1; i <= spec.L; ++i)
        for (int l = i; l <= spec.L; ++l) {
            out.second(i - 1, l - 1) = sol[idx(i, l)];
            out.second(l - 1, i - 1) = sol[idx(i, l)];
        }
    return out;
}

BilinearFit fit_bilinear(const ModelSpec& spec, const CorrelationSolution& solution) {
    const int L = solution.L;
    PairIndex idx(L);
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(idx.size(), 7);
    Eigen::VectorXd target(idx.size());
    for (int i = 1; i <= L; ++i)
        for (int l = i; l <= L; ++l) {
            const int row = idx(i, l);
            target[row] = solution.second(i - 1, l - 1);
            if (i == l) {
                design(row, 4) = static_cast<double>(i) * i;
                design(row, 5) = i;
                design(row, 6) = 1.0;
            } else {
                design(row, 0) = static_cast<double>(i) * l;
                design(row, 1) = i;
                design(row, 2) = l;
                design(row, 3) = 1.0;
            }
        }
    const Eigen::VectorXd coeff =
        design.colPivHouseholderQr().solve(target);

    BilinearFit fit;
    fit.a = coeff[0];
    fit.b = coeff[1];
    fit.c = coeff[2];
    fit.d = coeff[3];
    fit.e = coeff[4];
    fit.f = coeff[5];
    fit.g = coeff[6];

    const Eigen::VectorXd fitted = design * coeff;
    fit.fit_residual = (fitted - target).cwiseAbs().maxCoeff();
    const auto sys = assemble_system(spec, solution.profile);
    fit.system_residual = (sys.a * fitted - sys.rhs).cwiseAbs().maxCoeff();
    return fit;
}

MultilinearityResult multilinearity_experiment(const ModelSpec& spec) {
    validate(spec);
    if (!is_discrete(spec.family))
        throw SpecError("multilinearity experiment runs on particle chains");
    const int L = spec.L;
    if (L < 4) throw SpecError("multilinearity experiment needs L >= 4");
    const int cap = is_sep_type(spec.family) ? static_cast<int>(std::round(spec.shape)) : 40;
    const auto gen = build_generator(spec, cap);
    // direct solve on small spaces; the uniformized iteration avoids LU
    // fill-in on the larger ones and reaches the same 1e-13 residual
    const auto stat = gen.space.size() <= 4096 ? stationary_distribution(gen)
                                               : stationary_power_iteration(gen, 1e-13, 4'000'000);

    std::vector<double> m(static_cast<std::size_t>(L));
    Eigen::MatrixXd pair(L, L);
    std::vector<int> powers(static_cast<std::size_t>(L), 0);
    for (int i = 0; i < L; ++i) {
        powers.assign(static_cast<std::size_t>(L), 0);
        powers[i] = 1;
        m[i] = moment(gen, stat.pi, powers);
        for (int l = i; l < L; ++l) {
            powers.assign(static_cast<std::size_t>(L), 0);
            powers[i] = 1;
            powers[l] += 1;
            pair(i, l) = moment(gen, stat.pi, powers);
            pair(l, i) = pair(i, l);
        }
    }
    auto c2 = [&](int i, int l) { return pair(i - 1, l - 1) - m[i - 1] * m[l - 1]; };
    auto c3 = [&](int i, int j, int l) {
        powers.assign(static_cast<std::size_t>(L), 0);
        powers[i - 1] += 1;
        powers[j - 1] += 1;
        powers[l - 1] += 1;
        const double t = moment(gen, stat.pi, powers);
        return t - pair(i - 1, j - 1) * m[l - 1] - pair(i - 1, l - 1) * m[j - 1] -
               pair(j - 1, l - 1) * m[i - 1] + 2.0 * m[i - 1] * m[j - 1] * m[l - 1];
    };

    MultilinearityResult result;
    result.solver_residual = stat.residual;
    for (int i = 2; i + 1 <= L; ++i) result.d.push_back(c2(1, i + 1) - c2(1, i));
    for (int i = 3; i + 1 <= L; ++i) result.e.push_back(c3(1, 2, i + 1) - c3(1, 2, i));

    auto verdict = [&](const std::vector<double>& seq) -> std::string {
        const auto [lo, hi] = std::minmax_element(seq.begin(), seq.end());
        const double spread = *hi - *lo;
        const double res = std::max(result.solver_residual, 1e-15);
        if (spread < 1e3 * res) return "constant";
        if (spread > 1e6 * res) return "non-constant";
        return "inconclusive";
    };
    result.d_verdict = verdict(result.d);
    result.e_verdict = verdict(result.e);
    return result;
}

double th_moment_L1(const ModelSpec& spec, int order) {
    validate(spec);
    if (!is_thermalized(spec.family))
        throw SpecError("single-site thermal moments require a thermalized family");
    if (spec.L != 1) throw SpecError("single-site thermal moments require L = 1");
    const auto [wa, wb] = duality_weights(spec);
    double norm = 1.0;
    switch (spec.family) {
        case Family::ThSIP:
        case Family::ThBEP: norm = rising_factorial(spec.shape, order); break;
        case Family::ThSEP:
            norm = falling_factorial(static_cast<long long>(std::round(spec.shape)), order);
            break;
        case Family::ThIRW: norm = 1.0; break;
        case Family::KMP: norm = std::tgamma(order + 1.0); break;
        default: break;
    }
    return 0.5 * norm * (std::pow(wa, order) + std::pow(wb, order));
}

double irw_product_check(const ModelSpec& spec, int max_order) {
    validate(spec);
    if (spec.family != Family::IRW)
        throw SpecError("the product-measure test applies to independent walkers");
    const auto lambda = profile_closed_form(spec);
    double worst = 0.0;
    std::vector<DualConfig> bulk_configs;
    DualConfig xi(static_cast<std::size_t>(spec.L) + 2, 0);
    // enumerate xi with support on the bulk slots only
    std::function<void(int, int)> rec = [&](int site, int remaining) {
        if (site == spec.L + 1) {
            if (dual_total(xi) > 0) bulk_configs.push_back(xi);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            xi[site] = v;
            rec(site + 1, remaining - v);
        }
        xi[site] = 0;
    };
    rec(1, max_order);
    for (const auto& cfg : bulk_configs) {
        const double lhs = stationary_expectation(spec, cfg);
        double rhs = 1.0;
        for (int i = 1; i <= spec.L; ++i) rhs *= std::pow(lambda[i - 1], cfg[i]);
        worst = std::max(worst, std::fabs(lhs - rhs));
    }
    return worst;
}

int MomentSystem::pair_index(int i, int l) const {
    if (i > l) std::swap(i, l);
    return L + i * L - i * (i + 1) / 2 + l;  // 0-based sites
}

Eigen::VectorXd MomentSystem::pack(const std::vector<double>& m,
                                   const Eigen::MatrixXd& x) const {
    Eigen::VectorXd v(L + L * (L + 1) / 2);
    for (int i = 0; i < L; ++i) v[mean_index(i)] = m[i];
    for (int i = 0; i < L; ++i)
        for (int l = i; l < L; ++l) v[pair_index(i, l)] = x(i, l);
    return v;
}

MomentSystem bulk_moment_system(Family family, int L, double shape) {
    if (family != Family::SIP && family != Family::BEP && family != Family::IRW)
        throw SpecError("closed bulk moment systems cover SIP, IRW and BEP");
    const double K = family == Family::IRW ? 1.0 : shape;
    const bool with_mean_terms = family != Family::BEP;
    MomentSystem sys;
    sys.L = L;
    const int n = L + L * (L + 1) / 2;
    sys.a = Eigen::MatrixXd::Zero(n, n);

    auto mean_row = [&](int i) -> Eigen::MatrixXd::RowXpr { return sys.a.row(sys.mean_index(i)); };
    for (int i = 0; i < L; ++i) {
        auto row = mean_row(i);
        if (i > 0) {
            row(sys.mean_index(i - 1)) += K;
            row(sys.mean_index(i)) -= K;
        }
        if (i + 1 < L) {
            row(sys.mean_index(i + 1)) += K;
            row(sys.mean_index(i)) -= K;
        }
    }

    for (int i = 0; i < L; ++i) {
        for (int l = i; l < L; ++l) {
            auto row = sys.a.row(sys.pair_index(i, l));
            if (i == l) {
                for (const int nbr : {i - 1, i + 1}) {
                    if (nbr < 0 || nbr >= L) continue;
                    row(sys.pair_index(std::min(nbr, i), std::max(nbr, i))) += 2.0 * K + 2.0;
                    row(sys.pair_index(i, i)) -= 2.0 * K;
                    if (with_mean_terms) {
                        row(sys.mean_index(nbr)) += K;
                        row(sys.mean_index(i)) += K;
                    }
                }
            } else if (l == i + 1) {
                if (i > 0) {
                    row(sys.pair_index(i - 1, l)) += K;
                    row(sys.pair_index(i, l)) -= K;
                }
                if (l + 1 < L) {
                    row(sys.pair_index(i, l + 1)) += K;
                    row(sys.pair_index(i, l)) -= K;
                }
                row(sys.pair_index(i, i)) += K;
                row(sys.pair_index(l, l)) += K;
                row(sys.pair_index(i, l)) -= 2.0 * K + 2.0;
                if (with_mean_terms) {
                    row(sys.mean_index(i)) -= K;
                    row(sys.mean_index(l)) -= K;
                }
            } else {
                for (const auto& [a_, b_] : {std::pair{i - 1, l}, {i + 1, l}, {i, l - 1},
                                             {i, l + 1}}) {
                    if (a_ < 0 || b_ >= L) continue;
                    row(sys.pair_index(a_, b_)) += K;
                    row(sys.pair_index(i, l)) -= K;
                }
            }
        }
    }
    return sys;
}

ScalingReport inclusion_diffusion_scaling(int L, double shape, double total_energy,
                                          const std::vector<double>& particle_numbers,
                                          double t) {
    ScalingReport report;
    const auto sip = bulk_moment_system(Family::SIP, L, shape);
    const auto bep = bulk_moment_system(Family::BEP, L, shape);
    const Eigen::MatrixXd sip_prop = (sip.a * t).exp();
    const Eigen::MatrixXd bep_prop = (bep.a * t).exp();

    for (const double n_particles : particle_numbers) {
        const double eps = total_energy / n_particles;
        // ramp profile, rounded to particles site by site
        std::vector<double> m_eta(static_cast<std::size_t>(L));
        long long assigned = 0;
        for (int i = 0; i < L; ++i) {
            const double weight = 2.0 * (i + 1.0) / (L * (L + 1.0));
            m_eta[i] = std::floor(weight * n_particles);
            assigned += static_cast<long long>(m_eta[i]);
        }
        m_eta[L - 1] += static_cast<double>(static_cast<long long>(n_particles) - assigned);

        Eigen::MatrixXd x_eta(L, L);
        for (int i = 0; i < L; ++i)
            for (int l = 0; l < L; ++l) x_eta(i, l) = m_eta[i] * m_eta[l];

        const Eigen::VectorXd v_eta = sip_prop * sip.pack(m_eta, x_eta);

        std::vector<double> m_z(static_cast<std::size_t>(L));
        Eigen::MatrixXd x_z(L, L);
        for (int i = 0; i < L; ++i) {
            m_z[i] = eps * m_eta[i];
            for (int l = 0; l < L; ++l) x_z(i, l) = eps * eps * x_eta(i, l);
        }
        const Eigen::VectorXd v_z = bep_prop * bep.pack(m_z, x_z);

        double worst = 0.0;
        for (int i = 0; i < L; ++i)
            for (int l = i; l < L; ++l)
                worst = std::max(worst, std::fabs(eps * eps * v_eta[sip.pair_index(i, l)] -
                                                  v_z[bep.pair_index(i, l)]));
        report.particle_numbers.push_back(n_particles);
        report.discrepancy.push_back(worst);
    }
    return report;
}

double walkers_deterministic_scaling(int L, int particles, double total_energy, double t) {
    ModelSpec spec;
    spec.family = Family::IRW;
    spec.L = L;
    spec.boundary = BulkOnly{};
    const auto gen = build_generator(spec, particles);

    // deterministic start: everything on site 1
    Config eta0(static_cast<std::size_t>(L), 0);
    eta0[0] = particles;
    const double eps = total_energy / particles;

    // exact master-equation means: evolve f(eta) = eta_i backward
    std::vector<double> master(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        Eigen::VectorXd f(static_cast<Eigen::Index>(gen.space.size()));
        for (std::size_t s = 0; s < gen.space.size(); ++s) f[s] = gen.space.decode(s)[i];
        const Eigen::VectorXd evolved = semigroup_apply(gen.rates, std::move(f), t);
        master[i] = eps * evolved[gen.space.encode(eta0)];
    }

    // deterministic limit: plain lattice heat flow with reflecting ends
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(L, L);
    for (int i = 0; i < L; ++i) {
        if (i > 0) {
            lap(i, i - 1) += 1.0;
            lap(i, i) -= 1.0;
        }
        if (i + 1 < L) {
            lap(i, i + 1) += 1.0;
            lap(i, i) -= 1.0;
        }
    }
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(L);
    y0[0] = eps * particles;
    const Eigen::VectorXd y = (lap * t).exp() * y0;

    double worst = 0.0;
    for (int i = 0; i < L; ++i) worst = std::max(worst, std::fabs(master[i] - y[i]));
    return worst;
}

}  // namespace transport
