#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "transport/analysis.hpp"
#include "transport/mft.hpp"
#include "transport/special.hpp"

using namespace transport;
using namespace transport::test;

namespace {

MacroProfile bump_profile(double rho_a, double rho_b, double amplitude, int points = 401) {
    MacroProfile p = linear_profile(rho_a, rho_b, points);
    for (std::size_t i = 0; i < p.x.size(); ++i)
        p.rho[i] += amplitude * std::sin(M_PI * p.x[i]);
    return p;
}

}  // namespace

TEST_CASE("transport coefficient table") {
    const auto sip = transport_coefficients(Family::SIP, 1.0);
    CHECK(sip.diffusivity(0.7) == doctest::Approx(1.0));
    CHECK(sip.mobility(0.7) == doctest::Approx(2.0 * 0.7 * 1.7));
    const auto sep = transport_coefficients(Family::SEP, 2.0);
    CHECK(sep.diffusivity(0.7) == doctest::Approx(2.0));
    CHECK(sep.mobility(0.7) == doctest::Approx(2.0 * 0.7 * 1.3));
    const auto irw = transport_coefficients(Family::IRW, 0.0);
    CHECK(irw.mobility(0.7) == doctest::Approx(1.4));
    CHECK_FALSE(irw.finite_parametrization);
    const auto kmp = transport_coefficients(Family::KMP, 1.0);
    CHECK(kmp.mobility(0.7) == doctest::Approx(2.0 * 0.49));
}

TEST_CASE("hydrodynamic correlation formulas") {
    const double ra = 1.2, rb = 0.4, L = 100.0;
    SUBCASE("single-occupancy exclusion") {
        const auto c = macro_correlations(Family::SEP, 1.0, ra, rb, 0.2, 0.5, 0.8, L);
        CHECK(c.two_point ==
              doctest::Approx(-sqr(ra - rb) * 0.2 * 0.5 / L).epsilon(1e-13));
    }
    SUBCASE("signs per family") {
        const auto sip = macro_correlations(Family::SIP, 1.0, ra, rb, 0.2, 0.5, 0.8, L);
        const auto sep = macro_correlations(Family::SEP, 1.0, ra, rb, 0.2, 0.5, 0.8, L);
        const auto irw = macro_correlations(Family::IRW, 0.0, ra, rb, 0.2, 0.5, 0.8, L);
        const auto kmp = macro_correlations(Family::KMP, 1.0, ra, rb, 0.2, 0.5, 0.8, L);
        CHECK(sip.two_point > 0.0);
        CHECK(sep.two_point < 0.0);
        CHECK(irw.two_point == 0.0);
        CHECK(irw.three_point == 0.0);
        CHECK(kmp.two_point > 0.0);
    }
    SUBCASE("equilibrium kills the connected parts") {
        const auto c = macro_correlations(Family::SIP, 1.0, 0.9, 0.9, 0.2, 0.5, 0.8, L);
        CHECK(c.two_point == doctest::Approx(0.0));
        CHECK(c.three_point == doctest::Approx(0.0));
    }
    SUBCASE("n-point prefactor pattern relative to single-occupancy exclusion") {
        // corr_n = B^n (A/C)^(n-1) corr_n^[SEP(1)](rho/B)
        for (const auto family : {Family::SIP, Family::SEP}) {
            const double shape = 2.0;
            const auto coeff = transport_coefficients(family, shape);
            const auto full =
                macro_correlations(family, shape, ra, rb, 0.2, 0.5, 0.8, L);
            const auto base = macro_correlations(Family::SEP, 1.0, ra / coeff.b, rb / coeff.b,
                                                 0.2, 0.5, 0.8, L);
            const double ratio2 = sqr(coeff.b) * (coeff.a / coeff.c);
            const double ratio3 = std::pow(coeff.b, 3) * sqr(coeff.a / coeff.c);
            CHECK(full.two_point == doctest::Approx(ratio2 * base.two_point).epsilon(1e-11));
            CHECK(full.three_point ==
                  doctest::Approx(ratio3 * base.three_point).epsilon(1e-11));
        }
    }
}

TEST_CASE("auxiliary profile boundary-value problem") {
    const double ra = 1.5, rb = 0.5;
    SUBCASE("typical profile returns itself") {
        const auto rho = linear_profile(ra, rb);
        for (const auto family : {Family::SEP, Family::SIP, Family::KMP}) {
            const double shape = family == Family::SEP ? 2.0 : 1.0;
            const auto aux = solve_auxiliary_profile(family, shape, rho, ra, rb);
            CHECK(aux.ode_residual < 1e-10);
            for (std::size_t i = 0; i < rho.x.size(); ++i)
                CHECK(std::fabs(aux.f[i] - rho.rho[i]) < 1e-8);
        }
    }
    SUBCASE("walker limit is linear for any profile") {
        const auto rho = bump_profile(ra, rb, 0.3);
        const auto aux = solve_auxiliary_profile(Family::IRW, 0.0, rho, ra, rb);
        for (std::size_t i = 0; i < rho.x.size(); ++i)
            CHECK(aux.f[i] ==
                  doctest::Approx(ra + (rb - ra) * rho.x[i]).epsilon(1e-13));
    }
    SUBCASE("perturbed profiles solve to tolerance") {
        const auto rho = bump_profile(ra, rb, 0.25);
        for (const auto family : {Family::SEP, Family::SIP, Family::KMP}) {
            const double shape = family == Family::SEP ? 4.0 : 1.0;
            const auto aux = solve_auxiliary_profile(family, shape, rho, ra, rb);
            CHECK(aux.ode_residual < 1e-8);
            CHECK(aux.f.front() == doctest::Approx(ra));
            CHECK(aux.f.back() == doctest::Approx(rb));
            for (std::size_t i = 0; i + 1 < aux.f.size(); ++i)
                CHECK(aux.f[i + 1] < aux.f[i]);  // monotone decreasing
        }
    }
}

TEST_CASE("large-deviation functional") {
    const double ra = 1.5, rb = 0.5;
    SUBCASE("typical profile costs nothing") {
        const auto rho = linear_profile(ra, rb);
        for (const auto family : {Family::SEP, Family::SIP, Family::IRW, Family::KMP}) {
            const double shape = family == Family::SEP ? 2.0 : 1.0;
            CHECK(std::fabs(ld_functional(family, shape, rho, ra, rb)) < 1e-8);
        }
    }
    SUBCASE("perturbations cost") {
        const auto rho = bump_profile(ra, rb, 0.2);
        for (const auto family : {Family::SEP, Family::SIP, Family::IRW, Family::KMP}) {
            const double shape = family == Family::SEP ? 2.0 : 1.0;
            CHECK(ld_functional(family, shape, rho, ra, rb) > 1e-4);
        }
    }
    SUBCASE("walker closed form equals the quadratic-mobility limit") {
        // B -> infinity along sigma = 2 rho (B - rho)/B ... realized by
        // Richardson extrapolation in 1/B of the generic evaluation
        for (const double amplitude : {0.15, 0.3}) {
            const auto rho = bump_profile(ra, rb, amplitude);
            const double closed = ld_functional(Family::IRW, 0.0, rho, ra, rb);
            const double b1 = 2e4, b2 = 4e4;
            const double f1 = ld_functional_quadratic(1.0 / b1, b1, 1.0, rho, ra, rb);
            const double f2 = ld_functional_quadratic(1.0 / b2, b2, 1.0, rho, ra, rb);
            const double extrapolated = 2.0 * f2 - f1;
            CHECK(std::fabs(extrapolated - closed) < 1e-8);
        }
    }
    SUBCASE("scaling relation between families") {
        // F_family(rho) = (C/A) F_SEP(1)(rho/B)
        const auto rho = bump_profile(ra, rb, 0.2);
        for (const auto family : {Family::SIP, Family::SEP}) {
            const double shape = 2.0;
            const auto coeff = transport_coefficients(family, shape);
            const double direct = ld_functional(family, shape, rho, ra, rb);
            MacroProfile scaled = rho;
            for (auto& v : scaled.rho) v /= coeff.b;
            const double base = ld_functional_quadratic(1.0, 1.0, 1.0, scaled, ra / coeff.b,
                                                        rb / coeff.b);
            CHECK(std::fabs(direct - (coeff.c / coeff.a) * base) < 1e-7);
        }
    }
}

TEST_CASE("microscopic covariances against the hydrodynamic kernel") {
    const double ra = 1.2, rb = 0.4;
    SUBCASE("inclusion walkers") {
        const auto rows = micro_macro_compare(Family::SIP, 1.0, ra, rb, {20, 50, 100});
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].max_gap > rows[1].max_gap);
        CHECK(rows[1].max_gap > rows[2].max_gap);
        CHECK(rows[2].rel_gap < 0.03);
    }
    SUBCASE("exclusion walkers") {
        const auto rows = micro_macro_compare(Family::SEP, 2.0, ra, rb, {20, 50, 100});
        CHECK(rows[0].max_gap > rows[1].max_gap);
        CHECK(rows[1].max_gap > rows[2].max_gap);
        CHECK(rows[2].rel_gap < 0.03);
    }
    SUBCASE("energy diffusion at 2k = 1/2 maps onto the inclusion kernel") {
        // L cov -> 2 (theta_b - theta_a)^2 x (1 - y), the 2k = 1/2 case
        ModelSpec bep;
        bep.family = Family::BEP;
        bep.L = 100;
        bep.shape = 0.5;
        bep.boundary = BoundaryTemperatures{1.0, 0.4};
        const auto rho = reservoir_densities(bep);
        double worst_rel = 0.0;
        for (int i = 1; i < bep.L; i += 7)
            for (int l = i + 1; l <= bep.L; l += 7) {
                const double micro = bep.L * covariance_closed_form(bep, i, l);
                const double x = static_cast<double>(i) / (bep.L + 1);
                const double y = static_cast<double>(l) / (bep.L + 1);
                const double kernel = 2.0 * sqr(rho.rho_b - rho.rho_a) * x * (1.0 - y);
                worst_rel = std::max(worst_rel, std::fabs(micro - kernel) /
                                                    std::max(1e-12, std::fabs(kernel)));
            }
        CHECK(worst_rel < 0.06);
    }
}
