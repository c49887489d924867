#include "transport/mft.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "transport/analysis.hpp"
#include "transport/special.hpp"

namespace transport {

double TransportCoefficients::mobility(double rho) const {
    switch (family) {
        case Family::SIP: return 2.0 * rho * (rho - b);  // b = -2k
        case Family::SEP: return 2.0 * rho * (b - rho);
        case Family::IRW: return 2.0 * rho;
        case Family::KMP: return 2.0 * rho * rho;
        default: throw SpecError("mobility: unsupported family");
    }
}

TransportCoefficients transport_coefficients(Family family, double shape) {
    switch (family) {
        case Family::SIP: return {family, -1.0, -shape, shape, true};
        case Family::SEP: return {family, 1.0, shape, shape, true};
        case Family::IRW: return {family, 0.0, 0.0, 1.0, false};
        case Family::KMP: return {family, -1.0, 0.0, 1.0, false};
        default: throw SpecError("transport_coefficients: unsupported family");
    }
}

MacroCorrelations macro_correlations(Family family, double shape, double rho_a, double rho_b,
                                     double x, double y, double z, double chain_length) {
    if (!(0.0 < x && x < y && y < z && z < 1.0))
        throw std::invalid_argument("macro_correlations: need 0 < x < y < z < 1");
    double a_over_c = 0.0;
    switch (family) {
        case Family::SIP: a_over_c = -1.0 / shape; break;
        case Family::SEP: a_over_c = 1.0 / shape; break;
        case Family::IRW: a_over_c = 0.0; break;
        case Family::KMP: a_over_c = -1.0; break;
        default: throw SpecError("macro_correlations: unsupported family");
    }
    const double gap = rho_a - rho_b;
    MacroCorrelations out;
    out.mean = rho_a * (1.0 - x) + rho_b * x;
    out.two_point = -a_over_c * gap * gap * x * (1.0 - y) / chain_length;
    out.three_point = -2.0 * a_over_c * a_over_c * gap * gap * gap * x * (1.0 - 2.0 * y) *
                      (1.0 - z) / (chain_length * chain_length);
    return out;
}

MacroProfile linear_profile(double rho_a, double rho_b, int points) {
    MacroProfile p;
    p.x.resize(static_cast<std::size_t>(points));
    p.rho.resize(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        p.x[i] = static_cast<double>(i) / (points - 1);
        p.rho[i] = rho_a + (rho_b - rho_a) * p.x[i];
    }
    return p;
}

namespace {

// F'' = (rho - F) (F')^2 / (F (B - F))
struct BvpProblem {
    double b_param;
    const MacroProfile* rho;

    double rho_at(double x) const {
        const auto& xs = rho->x;
        const auto& ys = rho->rho;
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        const double h = xs[1] - xs[0];
        const auto i = std::min(xs.size() - 2, static_cast<std::size_t>(x / h));
        const double w = (x - xs[i]) / h;
        return (1.0 - w) * ys[i] + w * ys[i + 1];
    }

    double second_derivative(double x, double f, double fp) const {
        const double denom = f * (b_param - f);
        if (denom == 0.0) throw std::runtime_error("auxiliary profile hit the range boundary");
        return (rho_at(x) - f) * fp * fp / denom;
    }
};

// RK4 over the grid; returns F(1) or +-inf when the iterate leaves the
// admissible range (classified by overshoot direction).
double shoot(const BvpProblem& p, double rho_a, double rho_b, double slope,
             std::vector<double>* trace) {
    const int n = static_cast<int>(p.rho->x.size());
    const double h = p.rho->x[1] - p.rho->x[0];
    double f = rho_a, fp = slope;
    const double direction = rho_b > rho_a ? 1.0 : -1.0;
    if (trace) (*trace)[0] = f;
    for (int i = 0; i + 1 < n; ++i) {
        const double x = p.rho->x[i];
        const auto deriv = [&](double xx, double ff, double gg, double& df, double& dg) {
            df = gg;
            dg = p.second_derivative(xx, ff, gg);
        };
        double k1f, k1g, k2f, k2g, k3f, k3g, k4f, k4g;
        deriv(x, f, fp, k1f, k1g);
        deriv(x + 0.5 * h, f + 0.5 * h * k1f, fp + 0.5 * h * k1g, k2f, k2g);
        deriv(x + 0.5 * h, f + 0.5 * h * k2f, fp + 0.5 * h * k2g, k3f, k3g);
        deriv(x + h, f + h * k3f, fp + h * k3g, k4f, k4g);
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        fp += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        if (!std::isfinite(f) || !std::isfinite(fp) || fp * direction < 0.0)
            return direction > 0.0 ? 1e300 : -1e300;
        if (trace) (*trace)[i + 1] = f;
    }
    return f;
}

AuxiliaryProfile solve_with_b(double b_param, const MacroProfile& rho, double rho_a,
                              double rho_b) {
    const int n = static_cast<int>(rho.x.size());
    AuxiliaryProfile out;
    out.x = rho.x;
    out.f.assign(static_cast<std::size_t>(n), 0.0);

    const double delta = rho_b - rho_a;
    if (delta == 0.0) throw std::invalid_argument("equal boundary values: F is degenerate");
    const BvpProblem problem{b_param, &rho};

    // bracket the shooting slope
    double lo = delta * 1e-3, hi = delta * 1e3;
    auto overshoot = [&](double slope) {
        return (shoot(problem, rho_a, rho_b, slope, nullptr) - rho_b) * (delta > 0 ? 1.0 : -1.0);
    };
    // F'' has the sign of (rho - F) / (F (B - F)); for our profiles the map
    // slope -> F(1) is monotone, widen until the bracket straddles zero
    for (int tries = 0; overshoot(lo) > 0.0 && tries < 60; ++tries) lo *= 0.5;
    for (int tries = 0; overshoot(hi) < 0.0 && tries < 60; ++tries) hi *= 2.0;
    if (overshoot(lo) > 0.0 || overshoot(hi) < 0.0)
        throw std::runtime_error("auxiliary profile: shooting bracket not found");
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (overshoot(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    std::vector<double> trace(static_cast<std::size_t>(n));
    shoot(problem, rho_a, rho_b, 0.5 * (lo + hi), &trace);
    trace[0] = rho_a;
    trace[n - 1] = rho_b;
    out.f = trace;

    // Newton collocation polish on central differences
    const double h = rho.x[1] - rho.x[0];
    auto residual = [&](const std::vector<double>& f, std::vector<double>& r) {
        double worst = 0.0;
        for (int i = 1; i + 1 < n; ++i) {
            const double d1 = (f[i + 1] - f[i - 1]) / (2.0 * h);
            const double d2 = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
            r[i] = rho.rho[i] - f[i] - f[i] * (b_param - f[i]) * d2 / (d1 * d1);
            worst = std::max(worst, std::fabs(r[i]));
        }
        return worst;
    };
    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    double res = residual(out.f, r);
    for (int iter = 0; iter < 60 && res > 1e-12; ++iter) {
        // tridiagonal Jacobian by forward differences
        std::vector<double> dl(n, 0.0), dm(n, 0.0), du(n, 0.0);
        const double eps = 1e-7;
        std::vector<double> bumped = out.f;
        std::vector<double> rb(static_cast<std::size_t>(n), 0.0);
        for (int i = 1; i + 1 < n; ++i) {
            for (int off = -1; off <= 1; ++off) {
                const int j = i + off;
                if (j < 0 || j >= n) continue;
                bumped[j] += eps;
                const double d1 = (bumped[i + 1] - bumped[i - 1]) / (2.0 * h);
                const double d2 = (bumped[i + 1] - 2.0 * bumped[i] + bumped[i - 1]) / (h * h);
                const double rv =
                    rho.rho[i] - bumped[i] - bumped[i] * (b_param - bumped[i]) * d2 / (d1 * d1);
                bumped[j] = out.f[j];
                const double grad = (rv - r[i]) / eps;
                if (off == -1)
                    dl[i] = grad;
                else if (off == 0)
                    dm[i] = grad;
                else
                    du[i] = grad;
            }
        }
        // solve J delta = -r on interior nodes (Thomas algorithm)
        std::vector<double> c(n, 0.0), d(n, 0.0);
        double beta = dm[1];
        if (beta == 0.0) break;
        d[1] = -r[1] / beta;
        for (int i = 2; i + 1 < n; ++i) {
            c[i - 1] = du[i - 1] / beta;
            beta = dm[i] - dl[i] * c[i - 1];
            if (beta == 0.0) break;
            d[i] = (-r[i] - dl[i] * d[i - 1]) / beta;
        }
        for (int i = n - 3; i >= 1; --i) d[i] -= c[i] * d[i + 1];
        double damp = 1.0;
        std::vector<double> candidate = out.f;
        for (int attempt = 0; attempt < 12; ++attempt) {
            for (int i = 1; i + 1 < n; ++i) candidate[i] = out.f[i] + damp * d[i];
            const double cres = residual(candidate, rb);
            if (cres < res) {
                out.f = candidate;
                r = rb;
                res = cres;
                break;
            }
            damp *= 0.5;
        }
    }
    // monotone iterate check
    for (int i = 0; i + 1 < n; ++i)
        if ((out.f[i + 1] - out.f[i]) * delta < 0.0)
            throw std::runtime_error("auxiliary profile: non-monotone iterate rejected");
    out.ode_residual = res;
    return out;
}

}  // namespace

AuxiliaryProfile solve_auxiliary_profile_b(double b_param, const MacroProfile& rho, double rho_a,
                                           double rho_b) {
    return solve_with_b(b_param, rho, rho_a, rho_b);
}

AuxiliaryProfile solve_auxiliary_profile(Family family, double shape, const MacroProfile& rho,
                                         double rho_a, double rho_b) {
    switch (family) {
        case Family::SEP: return solve_with_b(shape, rho, rho_a, rho_b);
        case Family::SIP: return solve_with_b(-shape, rho, rho_a, rho_b);
        case Family::KMP: return solve_with_b(0.0, rho, rho_a, rho_b);
        case Family::IRW: {
            AuxiliaryProfile out;
            out.x = rho.x;
            out.f.resize(rho.x.size());
            for (std::size_t i = 0; i < rho.x.size(); ++i)
                out.f[i] = rho_a + (rho_b - rho_a) * rho.x[i];
            out.ode_residual = 0.0;
            return out;
        }
        default: throw SpecError("solve_auxiliary_profile: unsupported family");
    }
}

namespace {

std::vector<double> central_derivative(const std::vector<double>& f, double h) {
    const int n = static_cast<int>(f.size());
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

double clamp_interior(double v) { return std::max(v, 1e-10); }

}  // namespace

double ld_functional_quadratic(double a_param, double b_param, double c_param,
                               const MacroProfile& rho, double rho_a, double rho_b) {
    const auto aux = solve_with_b(b_param, rho, rho_a, rho_b);
    const int n = static_cast<int>(rho.x.size());
    const double h = rho.x[1] - rho.x[0];
    const auto fp = central_derivative(aux.f, h);
    const double delta = rho_b - rho_a;
    std::vector<double> integrand(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double r = rho.rho[i];
        const double f = aux.f[i];
        const double first = r == 0.0 ? 0.0 : r * std::log(clamp_interior(r / f));
        // (B - rho) and (B - F) always share a sign, so the ratio is positive
        const double ratio = (b_param - r) / (b_param - f);
        const double second = (b_param - r) * std::log(ratio);
        const double third = b_param * std::log(fp[i] / delta);
        integrand[i] = first + second + third;
    }
    return c_param / (a_param * b_param) * simpson(integrand, h);
}

double ld_functional(Family family, double shape, const MacroProfile& rho, double rho_a,
                     double rho_b) {
    const int n = static_cast<int>(rho.x.size());
    const double h = rho.x[1] - rho.x[0];
    const double delta = rho_b - rho_a;

    if (family == Family::IRW) {
        std::vector<double> integrand(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double r = rho.rho[i];
            const double f = rho_a + delta * rho.x[i];
            integrand[i] = (r == 0.0 ? 0.0 : r * std::log(r / f)) - r + f;
        }
        return simpson(integrand, h);
    }
    if (family == Family::KMP) {
        const auto aux = solve_with_b(0.0, rho, rho_a, rho_b);
        const auto fp = central_derivative(aux.f, h);
        std::vector<double> integrand(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double u = rho.rho[i] / aux.f[i];
            integrand[i] = u - 1.0 - std::log(u) - std::log(fp[i] / delta);
        }
        return simpson(integrand, h);
    }
    if (family == Family::SEP)
        return ld_functional_quadratic(1.0, shape, shape, rho, rho_a, rho_b);
    if (family == Family::SIP)
        return ld_functional_quadratic(-1.0, -shape, shape, rho, rho_a, rho_b);
    throw SpecError("ld_functional: unsupported family");
}

std::vector<MicroMacroRow> micro_macro_compare(Family family, double shape, double rho_a,
                                               double rho_b, const std::vector<int>& sizes) {
    std::vector<MicroMacroRow> rows;
    for (const int L : sizes) {
        ModelSpec spec;
        spec.family = family;
        spec.L = L;
        spec.shape = shape;
        BoundaryRates r;
        if (family == Family::SIP) {
            r = {rho_a, rho_a + shape, rho_b, rho_b + shape};
        } else if (family == Family::SEP) {
            r = {rho_a, shape - rho_a, rho_b, shape - rho_b};
        } else {
            throw SpecError("micro_macro_compare: closed-form covariances needed");
        }
        spec.boundary = r;
        validate(spec);

        const double sign = family == Family::SIP ? 1.0 : -1.0;
        const double gap2 = sqr(rho_a - rho_b);
        double worst = 0.0, kernel_max = 0.0;
        for (int i = 1; i < L; ++i) {
            for (int l = i + 1; l <= L; ++l) {
                const double micro = L * covariance_closed_form(spec, i, l);
                const double x = static_cast<double>(i) / (L + 1.0);
                const double y = static_cast<double>(l) / (L + 1.0);
                const double kernel = sign / shape * gap2 * x * (1.0 - y);
                worst = std::max(worst, std::fabs(micro - kernel));
                kernel_max = std::max(kernel_max, std::fabs(kernel));
            }
        }
        rows.push_back({L, worst, worst / kernel_max});
    }
    return rows;
}

}  // namespace transport
