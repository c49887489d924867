// Acceptance suite: every reference result the library claims, each checked
// at its stated tolerance. One line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "transport/analysis.hpp"
#include "transport/diffusion.hpp"
#include "transport/duality.hpp"
#include "transport/generator.hpp"
#include "transport/kmc.hpp"
#include "transport/mft.hpp"
#include "transport/rng.hpp"
#include "transport/special.hpp"

using namespace transport;

namespace {

int g_threads = 8;

ModelSpec make_spec(Family family, int L, double shape, double a, double b, double c, double d) {
    ModelSpec spec;
    spec.family = family;
    spec.L = L;
    spec.shape = shape;
    if (is_energy(family))
        spec.boundary = BoundaryTemperatures{a, b};
    else
        spec.boundary = BoundaryRates{a, b, c, d};
    return spec;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& label, double value) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s = %.3e", label.c_str(), value);
            detail += buf;
        }
    }
    void note(const std::string& label, double value) {
        if (!detail.empty()) detail += "; ";
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s = %.3e", label.c_str(), value);
        detail += buf;
    }
};

// 1 -- generator-level duality identity for the four base families
Outcome criterion_duality() {
    Outcome out;
    double worst = 0.0;
    worst = std::max(worst, check_duality_identity(make_spec(Family::SIP, 3, 1.0, 1, 3, 1, 2), 8, 2));
    worst = std::max(worst,
                     check_duality_identity(make_spec(Family::SEP, 3, 2.0, 1, 1.5, 0.5, 1.2), 8, 2));
    worst = std::max(worst,
                     check_duality_identity(make_spec(Family::IRW, 3, 0.0, 1.1, 0.9, 0.4, 1.3), 8, 2));
    out.require(worst < 1e-10, "particle residual", worst);
    const double bep =
        check_duality_identity(make_spec(Family::BEP, 3, 1.0, 1.2, 0.4, 0, 0), 0, 2);
    out.require(bep < 1e-10, "diffusion residual", bep);
    out.note("max residual", std::max(worst, bep));
    return out;
}

// 2 -- single-walker absorption: closed form vs boundary-value system
Outcome criterion_absorption() {
    Outcome out;
    Rng rng(424242);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double alpha = rng.uniform(0.2, 2.0);
        const double gamma = alpha + rng.uniform(0.2, 2.0);
        const double delta = rng.uniform(0.2, 2.0);
        const double beta = delta + rng.uniform(0.2, 2.0);
        const int L = 2 + static_cast<int>(rng.uniform_index(9));
        const std::vector<ModelSpec> specs = {
            make_spec(Family::SIP, L, rng.uniform(0.5, 3.0), alpha, gamma, delta, beta),
            make_spec(Family::SEP, L, 2.0, alpha, gamma, delta, beta),
            make_spec(Family::IRW, L, 0.0, alpha, gamma, delta, beta),
            make_spec(Family::BEP, L, rng.uniform(0.5, 3.0), alpha, beta, 0, 0),
        };
        for (const auto& spec : specs) {
            const auto closed = single_walker_absorption(spec);
            const auto solved = single_walker_absorption_system(spec);
            for (std::size_t i = 0; i < closed.size(); ++i)
                worst = std::max(worst, std::fabs(closed[i] - solved[i]));
        }
    }
    out.require(worst < 1e-12, "max gap", worst);
    out.note("max gap", worst);
    return out;
}

// 3 -- stationary profiles: exact solves at 1e-8 + tail, kinetic MC at 3 SE
Outcome criterion_profiles() {
    Outcome out;
    const std::vector<std::pair<ModelSpec, int>> exact_cases = {
        {make_spec(Family::SIP, 3, 1.0, 0.6, 2.1, 0.4, 1.3), 26},
        {make_spec(Family::SEP, 4, 2.0, 0.8, 1.1, 0.3, 0.9), 2},
        {make_spec(Family::IRW, 3, 0.0, 0.9, 1.2, 0.3, 0.8), 18},
    };
    double worst_exact = 0.0;
    for (const auto& [spec, cap] : exact_cases) {
        const auto gen = build_generator(spec, cap, g_threads);
        const auto stat = stationary_distribution(gen);
        const auto profile = profile_closed_form(spec);
        const double slack = 1e-8 + 100.0 * gen.truncated_outflow();
        for (int i = 0; i < spec.L; ++i) {
            std::vector<int> powers(static_cast<std::size_t>(spec.L), 0);
            powers[i] = 1;
            const double gap = std::fabs(moment(gen, stat.pi, powers) - profile[i]);
            out.require(gap < slack, "exact " + family_name(spec.family), gap);
            worst_exact = std::max(worst_exact, gap);
        }
    }
    out.note("exact", worst_exact);

    double worst_pull = 0.0;
    for (const auto& [spec, cap] : exact_cases) {
        SamplePlan plan;
        plan.n_samples = 25000;
        plan.thinning = 0.5;
        plan.replicas = 4;
        plan.threads = g_threads;
        plan.base_seed = 1234;
        const auto summary = sample_stationary(spec, plan);
        const auto profile = profile_closed_form(spec);
        for (int i = 0; i < spec.L; ++i) {
            const double pull = std::fabs(summary.mean[i] - profile[i]) /
                                std::max(summary.mean_se[i], 1e-4);
            worst_pull = std::max(worst_pull, pull);
        }
    }
    out.require(worst_pull < 3.0, "monte carlo pull", worst_pull);
    out.note("worst pull", worst_pull);
    return out;
}

// 4 -- covariances: two-point system vs closed forms, ansatz failure
Outcome criterion_covariances() {
    Outcome out;
    double worst = 0.0;
    for (const int L : {4, 6, 10}) {
        const auto sip = make_spec(Family::SIP, L, 1.0, 0.9, 1.9, 0.4, 1.4);
        const auto sep = make_spec(Family::SEP, L, 2.0, 1.2, 0.8, 0.4, 1.6);
        for (const auto& spec : {sip, sep}) {
            const auto solution = solve_appendix_system(spec);
            for (int i = 1; i < L; ++i)
                for (int l = i + 1; l <= L; ++l)
                    worst = std::max(worst, std::fabs(solution.covariance(i, l) -
                                                      covariance_closed_form(spec, i, l)));
        }
    }
    out.require(worst < 1e-10, "closed-form gap", worst);
    const auto generic = make_spec(Family::SEP, 6, 2.0, 1.0, 0.7, 0.2, 1.4);
    const double residual = fit_bilinear(generic, solve_appendix_system(generic)).system_residual;
    out.require(residual > 1e-6, "generic ansatz residual", residual);
    out.note("closed-form gap", worst);
    out.note("generic residual", residual);
    return out;
}

// 5 -- multilinearity differences at L = 6
Outcome criterion_multilinearity() {
    Outcome out;
    auto run = [&](double j2) {
        return multilinearity_experiment(make_spec(Family::SEP, 6, j2, 1.0, 1.0, 1.5, 0.5));
    };
    auto rel_spread = [](const std::vector<double>& seq) {
        double lo = seq[0], hi = seq[0], scale = 0.0;
        for (const double v : seq) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            scale = std::max(scale, std::fabs(v));
        }
        return (hi - lo) / scale;
    };

    const auto half = run(1.0);
    out.require(rel_spread(half.d) < 1e-10, "j=1/2 d spread", rel_spread(half.d));
    out.require(rel_spread(half.e) < 1e-10, "j=1/2 e spread", rel_spread(half.e));
    const auto one = run(2.0);
    out.require(rel_spread(one.d) < 1e-10, "j=1 d spread", rel_spread(one.d));
    out.require(one.e_verdict == "non-constant", "j=1 e verdict", rel_spread(one.e));
    const auto three_halves = run(3.0);
    out.require(three_halves.d_verdict == "non-constant", "j=3/2 d verdict",
                rel_spread(three_halves.d));
    const auto two = run(4.0);
    out.require(two.d_verdict == "non-constant", "j=2 d verdict", rel_spread(two.d));
    out.note("j=1 d spread", rel_spread(one.d));
    out.note("j=2 d spread", rel_spread(two.d));
    return out;
}

// 6 -- thermalized single-site moments
Outcome criterion_thermal_moments() {
    Outcome out;
    const std::vector<std::pair<ModelSpec, int>> grid = {
        {make_spec(Family::ThSIP, 1, 1.5, 0.6, 2.1, 0.4, 1.3), 64},
        {make_spec(Family::ThSEP, 1, 4.0, 0.8, 1.1, 0.3, 0.9), 4},
        {make_spec(Family::ThIRW, 1, 0.0, 0.9, 1.2, 0.3, 0.8), 40},
    };
    double worst = 0.0;
    for (const auto& [spec, cap] : grid) {
        const auto gen = build_generator(spec, cap);
        const auto stat = stationary_distribution(gen);
        for (int n = 0; n <= 4; ++n)
            worst = std::max(worst, std::fabs(th_moment_L1(spec, n) -
                                              factorial_moment(gen, stat.pi, {n})));
    }
    // the energy moments follow through the exact dual absorption route
    const auto thermal = make_spec(Family::ThBEP, 1, 1.7, 0.9, 0.3, 0, 0);
    for (int n = 1; n <= 4; ++n) {
        DualConfig xi = {0, n, 0};
        const double via_dual =
            rising_factorial(thermal.shape, n) * stationary_expectation(thermal, xi);
        worst = std::max(worst, std::fabs(th_moment_L1(thermal, n) - via_dual));
    }
    out.require(worst < 1e-10, "moment gap", worst);
    out.note("max gap", worst);
    return out;
}

// 7 -- nonequilibrium product measure of independent walkers
Outcome criterion_irw_product() {
    Outcome out;
    double worst = 0.0;
    for (const int L : {4, 6})
        worst = std::max(worst,
                         irw_product_check(make_spec(Family::IRW, L, 0.0, 0.9, 1.2, 0.3, 0.8), 3));
    out.require(worst < 1e-12, "factorization gap", worst);
    out.note("max gap", worst);
    return out;
}

// 8 -- the uniform-redistribution chain vs the 2k = 1 thermal chain
Outcome criterion_kmp_correspondence() {
    Outcome out;
    // dual transition tables at 2k = 1 must coincide entry by entry
    const auto kmp = make_spec(Family::KMP, 3, 1.0, 1.3, 0.7, 0, 0);
    const auto thermal_dual = make_spec(Family::ThBEP, 3, 1.0, 0.65, 0.35, 0, 0);
    double table_gap = 0.0;
    std::vector<DualConfig> probes = {{0, 1, 0, 2, 0}, {1, 0, 3, 1, 0}, {0, 2, 2, 2, 1},
                                      {0, 1, 1, 1, 0}};
    for (const auto& xi : probes) {
        std::map<DualConfig, double> a, b;
        dual_transitions(kmp, xi, [&](const DualConfig& to, double rate) { a[to] += rate; });
        dual_transitions(thermal_dual, xi,
                         [&](const DualConfig& to, double rate) { b[to] += rate; });
        if (a.size() != b.size()) table_gap = 1.0;
        for (const auto& [to, rate] : a)
            table_gap = std::max(table_gap, std::fabs(rate - (b.count(to) ? b.at(to) : -1.0)));
    }
    out.require(table_gap < 1e-13, "dual table gap", table_gap);

    // forward chains agree under T_thermal = T_uniform / 2 (the thermal baths
    // resample Gamma(2k, 2T), the uniform chain resamples Exp(T))
    SamplePlan plan;
    plan.n_samples = 40000;
    plan.thinning = 0.5;
    plan.replicas = 4;
    plan.threads = g_threads;
    plan.base_seed = 9090;
    const auto a = sample_stationary_energy(kmp, plan);
    plan.base_seed = 9091;
    const auto b = sample_stationary_energy(thermal_dual, plan);
    double worst_pull = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double se = std::sqrt(sqr(a.mean_se[i]) + sqr(b.mean_se[i]));
        worst_pull = std::max(worst_pull, std::fabs(a.mean[i] - b.mean[i]) / std::max(se, 1e-4));
        for (int l = i; l < 3; ++l) {
            const double se2 =
                std::sqrt(sqr(a.second_moment_se[i][l]) + sqr(b.second_moment_se[i][l]));
            worst_pull = std::max(worst_pull, std::fabs(a.second_moment[i][l] -
                                                        b.second_moment[i][l]) /
                                                  std::max(se2, 1e-4));
        }
    }
    out.require(worst_pull < 3.0, "forward moment pull", worst_pull);
    out.note("worst pull", worst_pull);
    return out;
}

// 9 -- transport coefficients from the simulated currents
Outcome criterion_transport() {
    Outcome out;
    struct Case {
        Family family;
        double shape, rho, drho, d_true, sigma_true;
    };
    const Case cases[] = {
        {Family::SIP, 1.0, 1.0, 1.5, 1.0, 2.0 * 1.0 * (1.0 + 1.0)},
        {Family::SEP, 2.0, 0.8, 0.8, 2.0, 2.0 * 0.8 * (2.0 - 0.8)},
        {Family::IRW, 0.0, 1.0, 1.5, 1.0, 2.0 * 1.0},
    };
    for (const auto& c : cases) {
        const auto est =
            estimate_transport(c.family, c.shape, 50, c.rho, c.drho, 1000.0, 768, 777, g_threads);
        const double d_err = std::fabs(est.diffusivity - c.d_true) / c.d_true;
        const double s_err = std::fabs(est.mobility - c.sigma_true) / c.sigma_true;
        out.require(d_err < 0.05, family_name(c.family) + " D error", d_err);
        out.require(s_err < 0.05, family_name(c.family) + " sigma error", s_err);
        out.note(family_name(c.family) + " D,sigma err", std::max(d_err, s_err));
    }
    return out;
}

// 10 -- microscopic covariances against the hydrodynamic kernel
Outcome criterion_micro_macro() {
    Outcome out;
    for (const auto family : {Family::SIP, Family::SEP}) {
        const double shape = family == Family::SEP ? 2.0 : 1.0;
        const auto rows = micro_macro_compare(family, shape, 1.2, 0.4, {20, 50, 100});
        const bool decreasing =
            rows[0].max_gap > rows[1].max_gap && rows[1].max_gap > rows[2].max_gap;
        out.require(decreasing, family_name(family) + " monotone", rows[2].max_gap);
        out.require(rows[2].rel_gap < 0.03, family_name(family) + " rel gap at L=100",
                    rows[2].rel_gap);
        out.note(family_name(family) + " rel gap", rows[2].rel_gap);
    }
    return out;
}

// 11 -- large-deviation functional checks
Outcome criterion_mft_functional() {
    Outcome out;
    const double ra = 1.5, rb = 0.5;
    const auto typical = linear_profile(ra, rb);
    double worst_typical = 0.0;
    for (const auto family : {Family::SEP, Family::SIP, Family::IRW, Family::KMP}) {
        const double shape = family == Family::SEP ? 2.0 : 1.0;
        worst_typical =
            std::max(worst_typical, std::fabs(ld_functional(family, shape, typical, ra, rb)));
    }
    out.require(worst_typical < 1e-8, "typical-profile cost", worst_typical);

    MacroProfile bumped = typical;
    for (std::size_t i = 0; i < bumped.x.size(); ++i)
        bumped.rho[i] += 0.25 * std::sin(M_PI * bumped.x[i]);

    const double closed = ld_functional(Family::IRW, 0.0, bumped, ra, rb);
    const double b1 = 2e4, b2 = 4e4;
    const double f1 = ld_functional_quadratic(1.0 / b1, b1, 1.0, bumped, ra, rb);
    const double f2 = ld_functional_quadratic(1.0 / b2, b2, 1.0, bumped, ra, rb);
    const double walker_gap = std::fabs(2.0 * f2 - f1 - closed);
    out.require(walker_gap < 1e-8, "walker-limit agreement", walker_gap);

    double worst_scaling = 0.0;
    for (const auto family : {Family::SIP, Family::SEP}) {
        const double shape = 2.0;
        const auto coeff = transport_coefficients(family, shape);
        const double direct = ld_functional(family, shape, bumped, ra, rb);
        MacroProfile scaled = bumped;
        for (auto& v : scaled.rho) v /= coeff.b;
        const double base =
            ld_functional_quadratic(1.0, 1.0, 1.0, scaled, ra / coeff.b, rb / coeff.b);
        worst_scaling = std::max(worst_scaling, std::fabs(direct - (coeff.c / coeff.a) * base));
    }
    out.require(worst_scaling < 1e-7, "family scaling relation", worst_scaling);
    out.note("typical", worst_typical);
    out.note("walker", walker_gap);
    out.note("scaling", worst_scaling);
    return out;
}

// 12 -- scaling limits of the closed chains
Outcome criterion_scaling_limits() {
    Outcome out;
    const auto report =
        inclusion_diffusion_scaling(4, 1.0, 2.0, {100.0, 1000.0, 10000.0}, 1.0);
    const bool monotone = report.discrepancy[0] > report.discrepancy[1] &&
                          report.discrepancy[1] > report.discrepancy[2];
    out.require(monotone, "inclusion->diffusion monotone", report.discrepancy.back());
    double worst = 0.0;
    for (const int n : {3, 6, 10})
        worst = std::max(worst, walkers_deterministic_scaling(4, n, 1.5, 0.8));
    out.require(worst < 1e-8, "walkers->deterministic gap", worst);
    out.note("second-moment gap at N=1e4", report.discrepancy.back());
    out.note("deterministic gap", worst);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_threads = std::atoi(argv[1]);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"duality identity of the generators", criterion_duality},
        {"single-walker absorption probabilities", criterion_absorption},
        {"stationary profiles (exact and monte carlo)", criterion_profiles},
        {"two-point covariances and the bilinear ansatz", criterion_covariances},
        {"multilinearity of connected correlations", criterion_multilinearity},
        {"thermalized single-site moments", criterion_thermal_moments},
        {"walker nonequilibrium product measure", criterion_irw_product},
        {"uniform-redistribution vs thermal 2k=1 chain", criterion_kmp_correspondence},
        {"simulated transport coefficients", criterion_transport},
        {"microscopic to hydrodynamic covariances", criterion_micro_macro},
        {"density large-deviation functional", criterion_mft_functional},
        {"scaling limits of the closed chains", criterion_scaling_limits},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2zu: %s (%.1f s)%s%s\n", outcome.pass ? "PASS" : "FAIL",
                    i + 1, criteria[i].first.c_str(), elapsed,
                    outcome.detail.empty() ? "" : " -- ", outcome.detail.c_str());
        std::fflush(stdout);
        all = all && outcome.pass;
    }
    std::printf("%s\n", all ? "acceptance: all criteria passed" : "acceptance: FAILURES above");
    return all ? 0 : 1;
}
