#include "transport/generator.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "transport/distributions.hpp"
#include "transport/special.hpp"

namespace transport {

namespace {

// Clipped probability mass below this is attributed to rounding, not to a
// genuinely truncated transition.
constexpr double kClipEps = 1e-14;

int effective_cap(const ModelSpec& spec, int cap) {
    if (is_sep_type(spec.family)) return std::min(cap, static_cast<int>(std::round(spec.shape)));
    return cap;
}

// Occupation factor of the arrival site: 2k + n, 2j - n, or 1.
double arrival_factor(Family family, double shape, int n) {
    switch (family) {
        case Family::SIP: return shape + n;
        case Family::SEP: return shape - n;
        case Family::IRW: return 1.0;
        default: throw SpecError("arrival_factor: not a base particle family");
    }
}

}  // namespace

StateSpace::StateSpace(int sites, int uniform_cap)
    : StateSpace(sites, std::vector<int>(static_cast<std::size_t>(sites), uniform_cap)) {}

StateSpace::StateSpace(int sites, std::vector<int> caps)
    : sites_(sites), caps_(std::move(caps)), strides_(static_cast<std::size_t>(sites)) {
    if (sites_ < 1 || static_cast<int>(caps_.size()) != sites_)
        throw std::invalid_argument("StateSpace: bad dimensions");
    std::size_t acc = 1;
    for (int i = sites_ - 1; i >= 0; --i) {
        strides_[i] = acc;
        const auto radix = static_cast<std::size_t>(caps_[i]) + 1;
        if (acc > SIZE_MAX / radix) throw std::overflow_error("StateSpace: size overflow");
        acc *= radix;
    }
    size_ = acc;
}

std::size_t StateSpace::encode(const Config& eta) const {
    std::size_t idx = 0;
    for (int i = 0; i < sites_; ++i) idx += static_cast<std::size_t>(eta[i]) * strides_[i];
    return idx;
}

Config StateSpace::decode(std::size_t index) const {
    Config eta(static_cast<std::size_t>(sites_));
    for (int i = 0; i < sites_; ++i) {
        eta[i] = static_cast<int>(index / strides_[i]);
        index %= strides_[i];
    }
    return eta;
}

namespace {

double transitions_impl(const ModelSpec& spec, const Config& eta, int cap,
                        const std::function<void(const Config&, double)>& emit) {
    if (!is_discrete(spec.family))
        throw SpecError("enumerate_transitions: family '" + family_name(spec.family) +
                        "' is continuous");
    const int L = spec.L;
    const int site_cap = effective_cap(spec, cap);
    double clipped = 0.0;
    Config work = eta;

    const bool thermal = is_thermalized(spec.family);
    if (!thermal) {
        auto hop = [&](int from, int to) {
            if (eta[from] == 0) return;
            const double rate = eta[from] * arrival_factor(spec.family, spec.shape, eta[to]);
            if (rate <= 0.0) return;
            if (eta[to] + 1 > site_cap) {
                clipped += rate;
                return;
            }
            work[from] -= 1;
            work[to] += 1;
            emit(work, rate);
            work[from] += 1;
            work[to] -= 1;
        };
        for (int i = 0; i + 1 < L; ++i) {
            hop(i, i + 1);
            hop(i + 1, i);
        }
        if (!spec.bulk_only()) {
            const auto& r = spec.rates();
            auto birth = [&](int site, double coeff) {
                const double rate = coeff * arrival_factor(spec.family, spec.shape, eta[site]);
                if (rate <= 0.0) return;
                if (eta[site] + 1 > site_cap) {
                    clipped += rate;
                    return;
                }
                work[site] += 1;
                emit(work, rate);
                work[site] -= 1;
            };
            auto death = [&](int site, double coeff) {
                const double rate = coeff * eta[site];
                if (rate <= 0.0) return;
                work[site] -= 1;
                emit(work, rate);
                work[site] += 1;
            };
            birth(0, r.alpha);
            death(0, r.gamma);
            birth(L - 1, r.delta);
            death(L - 1, r.beta);
        }
        return clipped;
    }

    // Thermalized families: bond clocks redistribute, boundary clocks resample.
    const auto kernel = bond_kernel(spec.family, spec.shape);
    for (int i = 0; i + 1 < L; ++i) {
        const int total = eta[i] + eta[i + 1];
        if (total == 0) continue;
        const auto pmf = kernel.pmf(total);
        for (int r = 0; r <= total; ++r) {
            if (r == eta[i] || pmf[r] == 0.0) continue;
            if (r > site_cap || total - r > site_cap) {
                clipped += pmf[r];
                continue;
            }
            work[i] = r;
            work[i + 1] = total - r;
            emit(work, pmf[r]);
        }
        work[i] = eta[i];
        work[i + 1] = eta[i + 1];
    }
    if (!spec.bulk_only()) {
        for (const bool left : {true, false}) {
            const int site = left ? 0 : L - 1;
            const auto bath = thermal_bath_marginal(spec, left);
            double mass = 0.0;
            for (int r = 0; r <= site_cap; ++r) {
                const double w = bath.pmf(r);
                mass += w;
                if (r == eta[site] || w == 0.0) continue;
                work[site] = r;
                emit(work, w);
            }
            work[site] = eta[site];
            clipped += std::max(0.0, 1.0 - mass);
        }
    }
    return clipped;
}

}  // namespace

bool enumerate_transitions(const ModelSpec& spec, const Config& eta, int cap,
                           const std::function<void(const Config&, double)>& emit) {
    return transitions_impl(spec, eta, cap, emit) > kClipEps;
}

std::vector<Transition> enumerate_transitions(const ModelSpec& spec, const Config& eta, int cap) {
    std::vector<Transition> out;
    enumerate_transitions(spec, eta, cap,
                          [&](const Config& to, double rate) { out.push_back({to, rate}); });
    return out;
}

double SparseGenerator::row_sum_error() const {
    double worst = 0.0;
    for (int r = 0; r < rates.outerSize(); ++r) {
        double sum = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rates, r); it; ++it)
            sum += it.value();
        worst = std::max(worst, std::fabs(sum));
    }
    return worst;
}

double SparseGenerator::truncated_outflow() const {
    double worst = 0.0;
    for (std::size_t s = 0; s < clipped_rate.size(); ++s)
        worst = std::max(worst, clipped_rate[s]);
    return worst;
}

SparseGenerator build_generator(const ModelSpec& spec, int cap, int threads,
                                std::size_t state_budget) {
    validate(spec);
    if (!is_discrete(spec.family))
        throw SpecError("build_generator: family '" + family_name(spec.family) +
                        "' is continuous");
    const int site_cap = effective_cap(spec, cap);
    double size_estimate = 1.0;
    for (int i = 0; i < spec.L; ++i) size_estimate *= site_cap + 1.0;
    if (size_estimate > static_cast<double>(state_budget))
        throw SpecError("state space of " + std::to_string(size_estimate) +
                        " states exceeds the budget of " + std::to_string(state_budget));

    StateSpace space(spec.L, site_cap);
    const std::size_t n = space.size();
    SparseGenerator gen{space, Eigen::SparseMatrix<double, Eigen::RowMajor>(
                                   static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                        std::vector<char>(n, 0), std::vector<double>(n, 0.0)};

    using Triplet = Eigen::Triplet<double>;
    const int nthreads = std::max(1, threads);
    std::vector<std::vector<Triplet>> buffers(static_cast<std::size_t>(nthreads));

    auto rows = [&](std::size_t begin, std::size_t end, std::vector<Triplet>& triplets) {
        for (std::size_t s = begin; s < end; ++s) {
            const Config eta = space.decode(s);
            double outflow = 0.0;
            const double clipped = transitions_impl(
                spec, eta, site_cap, [&](const Config& to, double rate) {
                    triplets.emplace_back(static_cast<int>(s),
                                          static_cast<int>(space.encode(to)), rate);
                    outflow += rate;
                });
            gen.truncated[s] = clipped > kClipEps ? 1 : 0;
            gen.clipped_rate[s] = clipped > kClipEps ? clipped : 0.0;
            triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), -outflow);
        }
    };

    if (nthreads == 1) {
        rows(0, n, buffers[0]);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const std::size_t begin = std::min(n, static_cast<std::size_t>(t) * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back(rows, begin, end, std::ref(buffers[t]));
        }
        for (auto& th : pool) th.join();
    }

    std::vector<Triplet> all;
    std::size_t total = 0;
    for (const auto& b : buffers) total += b.size();
    all.reserve(total);
    for (const auto& b : buffers) all.insert(all.end(), b.begin(), b.end());
    gen.rates.setFromTriplets(all.begin(), all.end());
    gen.rates.makeCompressed();
    return gen;
}

StationaryResult stationary_distribution(const SparseGenerator& gen) {
    const auto n = gen.rates.rows();
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(gen.rates.nonZeros()) + static_cast<std::size_t>(n));
    for (int r = 0; r < gen.rates.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gen.rates, r); it;
             ++it)
            if (it.col() != 0) triplets.emplace_back(static_cast<int>(it.col()),
                                                     static_cast<int>(it.row()), it.value());
    for (int j = 0; j < n; ++j) triplets.emplace_back(0, j, 1.0);

    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("stationary_distribution: singular or reducible generator");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[0] = 1.0;
    Eigen::VectorXd pi = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("stationary_distribution: solve failed");

    double min_entry = pi.minCoeff();
    if (min_entry < -1e-9)
        throw std::runtime_error("stationary_distribution: negative probability " +
                                 std::to_string(min_entry));
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();

    const Eigen::VectorXd residual_vec = gen.rates.transpose() * pi;
    return {std::move(pi), residual_vec.cwiseAbs().maxCoeff(), 0};
}

StationaryResult stationary_power_iteration(const SparseGenerator& gen, double tol, int max_iters,
                                            int threads) {
    const auto n = gen.rates.rows();
    const Eigen::SparseMatrix<double, Eigen::RowMajor> qt = gen.rates.transpose();
    double lambda = 0.0;
    for (int i = 0; i < n; ++i) lambda = std::max(lambda, -gen.rates.coeff(i, i));
    lambda *= 1.05;
    if (lambda == 0.0) throw std::runtime_error("power iteration: zero generator");

    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd flow(n);
    const int nthreads = std::max(1, threads);

    auto apply_qt = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        auto run = [&](int begin, int end) {
            for (int r = begin; r < end; ++r) {
                double acc = 0.0;
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(qt, r); it;
                     ++it)
                    acc += it.value() * x[it.col()];
                out[r] = acc;
            }
        };
        if (nthreads == 1) {
            run(0, static_cast<int>(n));
        } else {
            std::vector<std::thread> pool;
            const int chunk = static_cast<int>((n + nthreads - 1) / nthreads);
            for (int t = 0; t < nthreads; ++t)
                pool.emplace_back(run, std::min<int>(n, t * chunk),
                                  std::min<int>(n, (t + 1) * chunk));
            for (auto& th : pool) th.join();
        }
    };

    for (int iter = 1; iter <= max_iters; ++iter) {
        apply_qt(pi, flow);
        pi += flow / lambda;
        if (iter % 16 == 0 || iter == max_iters) {
            pi = pi.cwiseMax(0.0);
            pi /= pi.sum();
            apply_qt(pi, flow);
            const double residual = flow.cwiseAbs().maxCoeff();
            if (residual < tol) return {std::move(pi), residual, iter};
        }
    }
    throw std::runtime_error("power iteration: no convergence within iteration budget");
}

double check_detailed_balance(const SparseGenerator& gen, const Eigen::VectorXd& pi) {
    double worst = 0.0;
    for (int r = 0; r < gen.rates.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gen.rates, r); it;
             ++it) {
            if (it.row() == it.col()) continue;
            const double forward = it.value() * pi[it.row()];
            const double backward = gen.rates.coeff(it.col(), it.row()) * pi[it.col()];
            worst = std::max(worst, std::fabs(forward - backward));
        }
    return worst;
}

double moment(const SparseGenerator& gen, const Eigen::VectorXd& pi,
              const std::vector<int>& powers) {
    double acc = 0.0;
    for (std::size_t s = 0; s < static_cast<std::size_t>(pi.size()); ++s) {
        if (pi[s] == 0.0) continue;
        const Config eta = gen.space.decode(s);
        double term = pi[s];
        for (std::size_t i = 0; i < powers.size(); ++i)
            for (int p = 0; p < powers[i]; ++p) term *= eta[i];
        acc += term;
    }
    return acc;
}

double factorial_moment(const SparseGenerator& gen, const Eigen::VectorXd& pi,
                        const std::vector<int>& orders) {
    double acc = 0.0;
    for (std::size_t s = 0; s < static_cast<std::size_t>(pi.size()); ++s) {
        if (pi[s] == 0.0) continue;
        const Config eta = gen.space.decode(s);
        double term = pi[s];
        for (std::size_t i = 0; i < orders.size(); ++i)
            term *= falling_factorial(eta[i], orders[i]);
        acc += term;
    }
    return acc;
}

double generator_max_difference(const SparseGenerator& a, const SparseGenerator& b) {
    if (a.rates.rows() != b.rates.rows())
        throw std::invalid_argument("generator_max_difference: size mismatch");
    Eigen::SparseMatrix<double, Eigen::RowMajor> diff = a.rates - b.rates;
    double worst = 0.0;
    for (int r = 0; r < diff.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(diff, r); it; ++it)
            worst = std::max(worst, std::fabs(it.value()));
    return worst;
}

}  // namespace transport
