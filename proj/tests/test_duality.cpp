#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "transport/analysis.hpp"
#include "transport/duality.hpp"
#include "transport/kmc.hpp"
#include "transport/rng.hpp"
#include "transport/special.hpp"

using namespace transport;
using namespace transport::test;

namespace {

DualConfig single_walker(int L, int site) {  // site is 1-based
    DualConfig xi(static_cast<std::size_t>(L) + 2, 0);
    xi[site] = 1;
    return xi;
}

}  // namespace

TEST_CASE("duality function values") {
    const auto sip = particle_spec(Family::SIP, 1, 2.0, 1, 3, 1, 2);
    SUBCASE("empty dual configuration gives one") {
        CHECK(duality_eval(sip, {5}, {0, 0, 0}) == doctest::Approx(1.0));
    }
    SUBCASE("inclusion site factor") {
        // eta!/(eta-xi)! Gamma(2k)/Gamma(2k+xi) at 2k = 2, eta = 3, xi = 2
        CHECK(duality_eval(sip, {3}, {0, 2, 0}) == doctest::Approx(1.0).epsilon(1e-14));
        const auto sip1 = particle_spec(Family::SIP, 1, 1.0, 1, 3, 1, 2);
        CHECK(duality_eval(sip1, {3}, {0, 2, 0}) == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(duality_eval(sip1, {1}, {0, 2, 0}) == 0.0);  // xi above eta
    }
    SUBCASE("slot weights") {
        // (alpha/(gamma-alpha))^xi0 (delta/(beta-delta))^xiL1
        CHECK(duality_eval(sip, {0}, {2, 0, 1}) == doctest::Approx(0.25 * 1.0));
    }
    SUBCASE("energy diffusion factor") {
        const auto bep = energy_spec(Family::BEP, 1, 1.0, 1.0, 1.0);
        CHECK(duality_eval_energy(bep, {2.0}, {0, 2, 0}) == doctest::Approx(2.0));
    }
    SUBCASE("exclusion factor vanishes above 2j") {
        const auto sep = particle_spec(Family::SEP, 1, 1.0, 1, 1, 1, 1);
        CHECK(duality_eval(sep, {1}, {0, 2, 0}) == 0.0);
    }
}

TEST_CASE("dual process parameters") {
    const auto sip = particle_spec(Family::SIP, 3, 1.0, 1, 3, 1, 2);
    const auto rates = dual_walker_rates(sip);
    CHECK(rates.u == doctest::Approx(2.0));
    CHECK(rates.v == doctest::Approx(1.0));
    CHECK(rates.c == doctest::Approx(1.0));

    const auto bep = energy_spec(Family::BEP, 3, 1.4, 1.0, 2.0);
    const auto bep_rates = dual_walker_rates(bep);
    CHECK(bep_rates.u == doctest::Approx(0.5));
    CHECK(bep_rates.v == doctest::Approx(0.5));
    CHECK(dual_model(bep).bulk_family == Family::SIP);

    CHECK(dual_walker_rates(energy_spec(Family::KMP, 3, 1.0, 1, 2)).c == doctest::Approx(2.0));
}

TEST_CASE("redistribution duals coincide at 2k = 1") {
    const auto kmp = energy_spec(Family::KMP, 3, 1.0, 1.3, 0.7);
    const auto thermal = energy_spec(Family::ThBEP, 3, 1.0, 0.65, 0.35);
    for (const DualConfig xi : {DualConfig{0, 1, 0, 2, 0}, DualConfig{1, 0, 3, 1, 0},
                                DualConfig{0, 2, 2, 2, 1}}) {
        std::map<DualConfig, double> a, b;
        dual_transitions(kmp, xi, [&](const DualConfig& to, double rate) { a[to] += rate; });
        dual_transitions(thermal, xi, [&](const DualConfig& to, double rate) { b[to] += rate; });
        REQUIRE(a.size() == b.size());
        for (const auto& [to, rate] : a) {
            REQUIRE(b.count(to) == 1);
            CHECK(rate == doctest::Approx(b.at(to)).epsilon(1e-13));
        }
    }
}

TEST_CASE("single-walker absorption probabilities") {
    SUBCASE("unit-rate walker example") {
        const auto irw = particle_spec(Family::IRW, 3, 0.0, 1, 1, 1, 1);
        const auto p = single_walker_absorption(irw);
        CHECK(p[0] == doctest::Approx(1.0));
        CHECK(p[1] == doctest::Approx(0.75));
        CHECK(p[2] == doctest::Approx(0.5));
        CHECK(p[3] == doctest::Approx(0.25));
        CHECK(p[4] == doctest::Approx(0.0));
    }
    SUBCASE("closed form equals the boundary-value system") {
        Rng rng(20240811);
        for (int trial = 0; trial < 10; ++trial) {
            const double alpha = rng.uniform(0.2, 2.0);
            const double gamma = alpha + rng.uniform(0.2, 2.0);
            const double delta = rng.uniform(0.2, 2.0);
            const double beta = delta + rng.uniform(0.2, 2.0);
            const int L = 2 + static_cast<int>(rng.uniform_index(9));
            const std::vector<ModelSpec> specs = {
                particle_spec(Family::SIP, L, rng.uniform(0.5, 3.0), alpha, gamma, delta, beta),
                particle_spec(Family::SEP, L, 2.0, alpha, gamma, delta, beta),
                particle_spec(Family::IRW, L, 0.0, alpha, gamma, delta, beta),
                energy_spec(Family::BEP, L, rng.uniform(0.5, 3.0), alpha, beta),
                energy_spec(Family::KMP, L, 1.0, alpha, beta),
                particle_spec(Family::ThSIP, L, 1.5, alpha, gamma, delta, beta),
            };
            for (const auto& spec : specs) {
                const auto closed = single_walker_absorption(spec);
                const auto solved = single_walker_absorption_system(spec);
                for (std::size_t i = 0; i < closed.size(); ++i)
                    CHECK(std::fabs(closed[i] - solved[i]) < 1e-12);
            }
        }
    }
    SUBCASE("symmetric rates reflect") {
        const auto bep = energy_spec(Family::BEP, 5, 1.0, 1.0, 2.0);  // u = v = 1/2
        const auto p = single_walker_absorption(bep);
        for (int i = 1; i <= 5; ++i) CHECK(p[i] + p[6 - i] == doctest::Approx(1.0));
    }
}

TEST_CASE("absorption tables") {
    SUBCASE("one walker reduces to the closed form") {
        const auto spec = particle_spec(Family::SIP, 4, 1.0, 0.5, 2.0, 0.3, 1.1);
        const auto p = single_walker_absorption(spec);
        for (int site = 1; site <= 4; ++site) {
            const auto table = absorption_table_exact(spec, single_walker(4, site));
            CHECK(std::fabs(table.probability[1] - p[site]) < 1e-12);
            CHECK(std::fabs(table.probability[0] - (1.0 - p[site])) < 1e-12);
        }
    }
    SUBCASE("tables are normalized") {
        const auto spec = particle_spec(Family::ThSEP, 3, 2.0, 0.4, 1.1, 0.3, 0.9);
        DualConfig xi = {0, 1, 2, 0, 0};
        const auto table = absorption_table_exact(spec, xi);
        double mass = 0.0;
        for (const double p : table.probability) mass += p;
        CHECK(std::fabs(mass - 1.0) < 1e-12);
    }
    SUBCASE("independent walkers factorize") {
        const auto spec = particle_spec(Family::IRW, 4, 0.0, 0.7, 1.4, 0.2, 0.8);
        const auto p = single_walker_absorption(spec);
        DualConfig xi = {0, 2, 0, 1, 0, 0};  // two walkers at 1, one at 3
        const auto table = absorption_table_exact(spec, xi);
        // convolution of Binomial(2, p_1) and Bernoulli(p_3)
        std::vector<double> expected(4, 0.0);
        for (int m1 = 0; m1 <= 2; ++m1)
            for (int m3 = 0; m3 <= 1; ++m3) {
                const double w1 = std::exp(log_binomial(2, m1)) * std::pow(p[1], m1) *
                                  std::pow(1 - p[1], 2 - m1);
                const double w3 = std::pow(p[3], m3) * std::pow(1 - p[3], 1 - m3);
                expected[m1 + m3] += w1 * w3;
            }
        for (int m = 0; m <= 3; ++m)
            CHECK(std::fabs(table.probability[m] - expected[m]) < 1e-12);
    }
    SUBCASE("inclusion walkers do not factorize") {
        const auto spec = particle_spec(Family::SIP, 3, 1.0, 0.5, 1.5, 0.5, 1.5);
        const auto p = single_walker_absorption(spec);
        DualConfig xi = {0, 0, 2, 0, 0};
        const auto table = absorption_table_exact(spec, xi);
        const double independent = p[2] * p[2];
        CHECK(std::fabs(table.probability[2] - independent) > 1e-4);
    }
    SUBCASE("budget guard") {
        const auto spec = particle_spec(Family::SIP, 12, 1.0, 0.5, 2.0, 0.4, 1.2);
        DualConfig xi(static_cast<std::size_t>(spec.L) + 2, 0);
        xi[1] = 3;
        xi[5] = 3;
        CHECK_THROWS_WITH_AS(absorption_table_exact(spec, xi, 100),
                             doctest::Contains("budget"), SpecError);
    }
    SUBCASE("monte carlo agrees with the exact table") {
        const auto spec = particle_spec(Family::SIP, 3, 1.0, 0.5, 2.0, 0.4, 1.2);
        DualConfig xi = {0, 1, 0, 1, 0};
        const auto exact = absorption_table_exact(spec, xi);
        const auto mc = absorption_table_mc(spec, xi, 40000, 77);
        for (std::size_t m = 0; m < exact.probability.size(); ++m) {
            const double se = std::max(mc.std_error[m], 1e-4);
            CHECK(std::fabs(mc.probability[m] - exact.probability[m]) < 4.0 * se);
        }
    }
}

TEST_CASE("stationary expectations through absorption") {
    SUBCASE("profiles for every family") {
        const std::vector<ModelSpec> specs = {
            particle_spec(Family::SIP, 4, 1.0, 0.5, 2.0, 0.3, 1.1),
            particle_spec(Family::SEP, 4, 2.0, 0.5, 1.0, 0.3, 1.1),
            particle_spec(Family::IRW, 4, 0.0, 0.9, 1.2, 0.2, 0.8),
            energy_spec(Family::BEP, 4, 1.3, 0.8, 0.4),
            energy_spec(Family::KMP, 4, 1.0, 0.8, 0.4),
            particle_spec(Family::ThIRW, 4, 0.0, 0.9, 1.2, 0.2, 0.8),
        };
        for (const auto& spec : specs) {
            const auto rho = reservoir_densities(spec);
            const auto p = single_walker_absorption(spec);
            const double scale = duality_site_scale(spec);
            for (int site = 1; site <= spec.L; ++site) {
                const double expectation =
                    stationary_expectation(spec, single_walker(spec.L, site)) / scale;
                const double reference = rho.rho_a * p[site] + rho.rho_b * (1.0 - p[site]);
                CHECK(expectation == doctest::Approx(reference).epsilon(1e-12));
            }
        }
    }
    SUBCASE("equilibrium collapses to powers of the density") {
        const auto spec = particle_spec(Family::SIP, 3, 1.0, 1, 2, 2, 4);
        const auto [wa, wb] = duality_weights(spec);
        REQUIRE(wa == doctest::Approx(wb));
        for (const DualConfig xi :
             {DualConfig{0, 1, 1, 0, 0}, DualConfig{0, 0, 2, 0, 0}, DualConfig{0, 1, 0, 1, 0}})
            CHECK(stationary_expectation(spec, xi) ==
                  doctest::Approx(std::pow(wa, 2)).epsilon(1e-12));
    }
}

TEST_CASE("generator duality identity") {
    SUBCASE("base particle families") {
        const std::vector<ModelSpec> specs = {
            particle_spec(Family::SIP, 3, 1.0, 1, 3, 1, 2),
            particle_spec(Family::SEP, 3, 2.0, 1, 1.5, 0.5, 1.2),
            particle_spec(Family::IRW, 3, 0.0, 1.1, 0.9, 0.4, 1.3),
        };
        for (const auto& spec : specs) CHECK(check_duality_identity(spec, 8, 2) < 1e-10);
    }
    SUBCASE("thermalized particle families") {
        const std::vector<ModelSpec> specs = {
            particle_spec(Family::ThSIP, 3, 1.5, 1, 3, 1, 2),
            particle_spec(Family::ThSEP, 3, 3.0, 1, 1.5, 0.5, 1.2),
            particle_spec(Family::ThIRW, 3, 0.0, 1.1, 0.9, 0.4, 1.3),
        };
        for (const auto& spec : specs) CHECK(check_duality_identity(spec, 6, 2) < 1e-10);
    }
    SUBCASE("energy diffusion via polynomials") {
        CHECK(check_duality_identity(energy_spec(Family::BEP, 3, 1.0, 1.2, 0.4), 0, 2) < 1e-10);
        CHECK(check_duality_identity(energy_spec(Family::BEP, 2, 0.5, 0.7, 1.9), 0, 3) < 1e-10);
    }
    SUBCASE("redistribution energy models") {
        CHECK(check_duality_identity(energy_spec(Family::KMP, 3, 1.0, 1.2, 0.4), 0, 2) < 1e-10);
        CHECK(check_duality_identity(energy_spec(Family::ThBEP, 3, 1.7, 1.2, 0.4), 0, 2) <
              1e-10);
    }
}

TEST_CASE("moment evolution") {
    const auto spec = particle_spec(Family::SIP, 3, 1.0, 0.6, 2.1, 0.4, 1.3);
    const Config eta = {2, 0, 1};
    const DualConfig xi = {0, 1, 1, 0, 0};
    SUBCASE("initial condition") {
        CHECK(moment_evolution(spec, eta, xi, 0.0) ==
              doctest::Approx(duality_eval(spec, eta, xi)));
    }
    SUBCASE("long-time limit reaches the stationary expectation") {
        const double limit = stationary_expectation(spec, xi);
        CHECK(std::fabs(moment_evolution(spec, eta, xi, 400.0) - limit) < 1e-10);
    }
    SUBCASE("agrees with the forward semigroup on the truncated cube") {
        // exact forward evolution of D(., xi) vs dual evolution of D(eta, .)
        const int cap = 24;
        const auto gen = build_generator(spec, cap);
        Eigen::VectorXd forward(static_cast<Eigen::Index>(gen.space.size()));
        for (std::size_t s = 0; s < gen.space.size(); ++s)
            forward[s] = duality_eval(spec, gen.space.decode(s), xi);
        double reached = 0.0;
        for (const double t : {0.1, 1.0, 10.0}) {
            forward = semigroup_apply(gen.rates, std::move(forward), t - reached);
            reached = t;
            for (const Config& probe :
                 {Config{0, 0, 0}, Config{1, 0, 2}, Config{2, 1, 0}, Config{3, 2, 1}}) {
                const double dual_value = moment_evolution(spec, probe, xi, t);
                CHECK(std::fabs(forward[gen.space.encode(probe)] - dual_value) < 1e-9);
            }
        }
    }
    SUBCASE("forward kinetic monte carlo satisfies the duality relation") {
        const double t = 1.0;
        const double reference = moment_evolution(spec, eta, xi, t);
        Rng seeder(12);
        double acc = 0.0, acc2 = 0.0;
        const int runs = 60000;
        for (int run = 0; run < runs; ++run) {
            KmcSimulator sim(spec, seeder.next_u64());
            sim.set_config(eta);
            sim.run_until(t);
            const double v = duality_eval(spec, sim.config(), xi);
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / runs;
        const double se = std::sqrt((acc2 / runs - mean * mean) / runs);
        CHECK(std::fabs(mean - reference) < 3.5 * se);
    }
}

TEST_CASE("dual trajectories conserve the walker count") {
    const auto spec = particle_spec(Family::ThSIP, 4, 1.0, 1, 3, 1, 2);
    DualConfig xi = {0, 2, 0, 1, 0, 0};
    const int total = dual_total(xi);
    Rng rng(5);
    std::vector<DualConfig> targets;
    std::vector<double> rates;
    for (int event = 0; event < 200; ++event) {
        targets.clear();
        rates.clear();
        double outflow = 0.0;
        dual_transitions(spec, xi, [&](const DualConfig& to, double rate) {
            targets.push_back(to);
            rates.push_back(rate);
            outflow += rate;
        });
        if (targets.empty()) break;
        xi = targets[rng.weighted_index(rates, outflow)];
        CHECK(dual_total(xi) == total);
    }
}
