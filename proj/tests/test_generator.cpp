#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "transport/distributions.hpp"
#include "transport/generator.hpp"
#include "transport/io.hpp"

using namespace transport;
using namespace transport::test;

TEST_CASE("transition enumeration follows the rate laws") {
    SUBCASE("inclusion bulk hop") {
        const auto spec = particle_spec(Family::SIP, 2, 1.0, 1, 3, 1, 2);
        const auto list = enumerate_transitions(spec, {1, 0}, 10);
        bool found = false;
        for (const auto& t : list)
            if (t.to == Config{0, 1}) {
                found = true;
                CHECK(t.rate == doctest::Approx(1.0));  // eta_1 (2k + eta_2) = 1
            }
        CHECK(found);
    }
    SUBCASE("full exclusion lattice blocks all hops") {
        const auto spec = particle_spec(Family::SEP, 2, 1.0, 1, 1, 1, 1);
        for (const auto& t : enumerate_transitions(spec, {1, 1}, 1)) {
            // only boundary deaths remain
            CHECK(t.to[0] + t.to[1] == 1);
        }
    }
    SUBCASE("thermalized walker bond outcomes") {
        const auto spec = particle_spec(Family::ThIRW, 2, 0.0, 1, 1, 1, 1);
        ModelSpec bulk = spec;
        bulk.boundary = BulkOnly{};
        const auto list = enumerate_transitions(bulk, {2, 0}, 10);
        REQUIRE(list.size() == 2);  // r = 0 is a self-move, r in {1, 2} remain
        for (const auto& t : list) {
            if (t.to == Config{1, 1}) CHECK(t.rate == doctest::Approx(0.5));
            if (t.to == Config{0, 2}) CHECK(t.rate == doctest::Approx(0.25));
        }
    }
    SUBCASE("continuous families are rejected") {
        CHECK_THROWS_AS(enumerate_transitions(energy_spec(Family::KMP, 2, 1.0, 1, 1), {0, 0}, 5),
                        SpecError);
    }
}

TEST_CASE("generator assembly") {
    SUBCASE("exclusion cube") {
        const auto gen = build_generator(particle_spec(Family::SEP, 3, 1.0, 1, 2, 1, 2), 1);
        CHECK(gen.space.size() == 8);
        CHECK(gen.row_sum_error() < 1e-13);
        for (const char f : gen.truncated) CHECK(f == 0);
    }
    SUBCASE("inclusion cap flags") {
        const auto gen = build_generator(particle_spec(Family::SIP, 2, 1.0, 1, 3, 1, 2), 5);
        CHECK(gen.space.size() == 36);
        CHECK(gen.row_sum_error() < 1e-13);
        for (std::size_t s = 0; s < gen.space.size(); ++s) {
            const auto eta = gen.space.decode(s);
            const bool at_cap = eta[0] == 5 || eta[1] == 5;
            CHECK(static_cast<bool>(gen.truncated[s]) == at_cap);
        }
        CHECK(gen.truncated_outflow() > 0.0);
    }
    SUBCASE("thermalized exclusion bond split") {
        const auto spec = particle_spec(Family::ThSEP, 2, 1.0, 1, 1, 1, 1);
        ModelSpec bulk = spec;
        bulk.boundary = BulkOnly{};
        const auto list = enumerate_transitions(bulk, {1, 0}, 1);
        REQUIRE(list.size() == 1);
        CHECK(list[0].to == Config{0, 1});
        CHECK(list[0].rate == doctest::Approx(0.5));  // hypergeometric (1, 2, 1)
    }
    SUBCASE("state budget guard") {
        CHECK_THROWS_WITH_AS(build_generator(particle_spec(Family::SIP, 6, 1.0, 1, 3, 1, 2), 40,
                                             1, 100000),
                             doctest::Contains("budget"), SpecError);
    }
    SUBCASE("parallel construction is identical") {
        const auto spec = particle_spec(Family::SIP, 3, 1.0, 1, 3, 1, 2);
        const auto a = build_generator(spec, 6, 1);
        const auto b = build_generator(spec, 6, 4);
        CHECK(generator_max_difference(a, b) == 0.0);
    }
}

TEST_CASE("stationary distributions") {
    SUBCASE("single-site exclusion balance") {
        const auto gen = build_generator(particle_spec(Family::SEP, 1, 1.0, 1, 1, 1, 1), 1);
        const auto stat = stationary_distribution(gen);
        CHECK(stat.pi[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(stat.pi[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(stat.residual < 1e-12);
    }
    SUBCASE("walker equilibrium is product poisson") {
        const auto spec = particle_spec(Family::IRW, 2, 0.0, 1, 1, 1, 1);
        const auto gen = build_generator(spec, 18);
        const auto stat = stationary_distribution(gen);
        const auto marginal = equilibrium_marginal(spec);
        for (int n = 0; n <= 6; ++n) {
            double prob = 0.0;
            for (std::size_t s = 0; s < gen.space.size(); ++s)
                if (gen.space.decode(s)[0] == n) prob += stat.pi[s];
            CHECK(prob == doctest::Approx(marginal.pmf(n)).epsilon(1e-9));
        }
    }
    SUBCASE("direct solve and power iteration agree") {
        const auto gen = build_generator(particle_spec(Family::SEP, 3, 2.0, 1, 2, 0.5, 1), 2);
        const auto lu = stationary_distribution(gen);
        const auto power = stationary_power_iteration(gen, 1e-13);
        CHECK(power.iterations > 0);
        for (Eigen::Index i = 0; i < lu.pi.size(); ++i)
            CHECK(std::fabs(lu.pi[i] - power.pi[i]) < 1e-11);
    }
    SUBCASE("parallel power iteration matches exactly") {
        const auto gen = build_generator(particle_spec(Family::SEP, 3, 2.0, 1, 2, 0.5, 1), 2);
        const auto serial = stationary_power_iteration(gen, 1e-13, 2'000'000, 1);
        const auto parallel = stationary_power_iteration(gen, 1e-13, 2'000'000, 4);
        for (Eigen::Index i = 0; i < serial.pi.size(); ++i)
            CHECK(std::fabs(serial.pi[i] - parallel.pi[i]) <= 1e-13);
    }
    SUBCASE("continuous families cannot be enumerated") {
        CHECK_THROWS_AS(build_generator(energy_spec(Family::KMP, 2, 1.0, 1, 1), 4), SpecError);
    }
}

TEST_CASE("detailed balance") {
    SUBCASE("closed inclusion chain with product law") {
        const auto spec = bulk_spec(Family::SIP, 3, 1.0);
        const int cap = 7;
        const auto gen = build_generator(spec, cap);
        const auto marginal = bulk_marginal(Family::SIP, 1.0, 0.35);
        Eigen::VectorXd pi(static_cast<Eigen::Index>(gen.space.size()));
        for (std::size_t s = 0; s < gen.space.size(); ++s) {
            double w = 1.0;
            for (const int n : gen.space.decode(s)) w *= marginal.pmf(n);
            pi[s] = w;
        }
        pi /= pi.sum();
        CHECK(check_detailed_balance(gen, pi) < 1e-12);
    }
    SUBCASE("reservoirs at matched rates keep reversibility") {
        const auto spec = particle_spec(Family::SIP, 3, 1.0, 1, 2, 2, 4);  // alpha beta = gamma delta
        const auto gen = build_generator(spec, 16);
        const auto stat = stationary_distribution(gen);
        CHECK(check_detailed_balance(gen, stat.pi) < 1e-12);
    }
    SUBCASE("mismatched reservoirs break reversibility") {
        const auto spec = particle_spec(Family::SEP, 2, 1.0, 1, 1, 1, 2);
        const auto gen = build_generator(spec, 1);
        const auto stat = stationary_distribution(gen);
        CHECK(check_detailed_balance(gen, stat.pi) > 1e-4);
    }
}

TEST_CASE("rescaled exclusion generators approach the walker generator") {
    const double alpha = 0.8, gamma = 1.3, delta = 0.5, beta = 1.1;
    const int cap = 4, L = 2;
    const auto walker = build_generator(particle_spec(Family::IRW, L, 0.0, alpha, gamma, delta, beta), cap);
    double previous = 1e9;
    for (const double j2 : {8.0, 16.0, 32.0, 64.0}) {
        auto spec = particle_spec(Family::SEP, L, j2, alpha, j2 * gamma, delta, j2 * beta);
        auto gen = build_generator(spec, cap);
        gen.rates /= j2;
        const double gap = generator_max_difference(gen, walker);
        CHECK(gap < previous);
        previous = gap;
    }
}

TEST_CASE("matrix and distribution exports") {
    const auto gen = build_generator(particle_spec(Family::SEP, 2, 1.0, 1, 1, 1, 1), 1);
    const auto stat = stationary_distribution(gen);
    const auto coord = matrix_to_coordinate_text(gen);
    CHECK(coord.find("# states: 4") == 0);
    const auto csv = distribution_to_csv(gen, stat.pi);
    CHECK(csv.find("state_index,eta_1,eta_2,probability") == 0);
}
