#include "transport/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "transport/distributions.hpp"
#include "transport/special.hpp"

namespace transport {

namespace {

constexpr long long kRateAuditPeriod = 1 << 20;

double hop_factor(Family family, double shape, int arrival) {
    switch (family) {
        case Family::SIP: return shape + arrival;
        case Family::SEP: return shape - arrival;
        case Family::IRW: return 1.0;
        default: throw SpecError("hop_factor: not a base particle family");
    }
}

}  // namespace

double default_burn_in(const ModelSpec& spec) { return 10.0 * spec.L * spec.L; }

KmcSimulator::KmcSimulator(ModelSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)),
      thermal_(is_thermalized(spec_.family)),
      nbonds_(spec_.L - 1),
      eta_(static_cast<std::size_t>(spec_.L), 0),
      bond_current_(static_cast<std::size_t>(nbonds_), 0.0),
      drift_integral_(static_cast<std::size_t>(nbonds_), 0.0),
      rng_(seed) {
    validate(spec_);
    if (!is_discrete(spec_.family))
        throw SpecError("KmcSimulator: family '" + family_name(spec_.family) +
                        "' needs the diffusion simulator");
    if (thermal_) {
        rates_.assign(static_cast<std::size_t>(nbonds_) + 2, 0.0);
        if (!spec_.bulk_only()) {
            const auto left = thermal_bath_marginal(spec_, true);
            const auto right = thermal_bath_marginal(spec_, false);
            bath_cap_ = std::max(left.support_cap(1e-13), right.support_cap(1e-13));
            std::vector<double> pl(static_cast<std::size_t>(bath_cap_) + 1);
            std::vector<double> pr(static_cast<std::size_t>(bath_cap_) + 1);
            for (int r = 0; r <= bath_cap_; ++r) {
                pl[r] = left.pmf(r);
                pr[r] = right.pmf(r);
            }
            bath_left_ = DiscreteCdf(pl);
            bath_right_ = DiscreteCdf(pr);
        }
    } else {
        rates_.assign(2 * static_cast<std::size_t>(nbonds_) + 4, 0.0);
    }
    rebuild_rates();
}

void KmcSimulator::set_config(const Config& eta) {
    if (static_cast<int>(eta.size()) != spec_.L)
        throw std::invalid_argument("set_config: wrong length");
    eta_ = eta;
    for (int i = 0; i < spec_.L; ++i) check_bounds(i);
    rebuild_rates();
}

void KmcSimulator::reset_time_and_currents() {
    time_ = 0.0;
    std::fill(bond_current_.begin(), bond_current_.end(), 0.0);
    std::fill(drift_integral_.begin(), drift_integral_.end(), 0.0);
}

void KmcSimulator::check_bounds(int site) const {
    if (eta_[site] < 0) throw std::logic_error("negative occupation");
    if (is_sep_type(spec_.family) &&
        eta_[site] > static_cast<int>(std::round(spec_.shape)))
        throw std::logic_error("exclusion bound violated");
}

double KmcSimulator::drift(int bond) const {
    if (thermal_) return 0.5 * (eta_[bond] - eta_[bond + 1]);
    const double g = spec_.family == Family::IRW ? 1.0 : spec_.shape;
    return g * (eta_[bond] - eta_[bond + 1]);
}

void KmcSimulator::refresh_channel(int channel) {
    if (thermal_) {
        if (channel < nbonds_) {
            rates_[channel] = 1.0;
        } else {
            rates_[channel] = spec_.bulk_only() ? 0.0 : 1.0;
        }
        return;
    }
    const auto& r = spec_.bulk_only() ? BoundaryRates{} : spec_.rates();
    double rate = 0.0;
    if (channel < nbonds_) {
        rate = eta_[channel] * hop_factor(spec_.family, spec_.shape, eta_[channel + 1]);
    } else if (channel < 2 * nbonds_) {
        const int b = channel - nbonds_;
        rate = eta_[b + 1] * hop_factor(spec_.family, spec_.shape, eta_[b]);
    } else if (!spec_.bulk_only()) {
        const int last = spec_.L - 1;
        switch (channel - 2 * nbonds_) {
            case 0: rate = r.alpha * hop_factor(spec_.family, spec_.shape, eta_[0]); break;
            case 1: rate = r.gamma * eta_[0]; break;
            case 2: rate = r.delta * hop_factor(spec_.family, spec_.shape, eta_[last]); break;
            case 3: rate = r.beta * eta_[last]; break;
        }
    }
    rates_[channel] = std::max(0.0, rate);
}

void KmcSimulator::refresh_site(int site) {
    if (thermal_) return;  // thermal clock rates never change
    if (site > 0) {
        refresh_channel(site - 1);
        refresh_channel(nbonds_ + site - 1);
    }
    if (site < nbonds_) {
        refresh_channel(site);
        refresh_channel(nbonds_ + site);
    }
    if (!spec_.bulk_only()) {
        if (site == 0) {
            refresh_channel(2 * nbonds_ + 0);
            refresh_channel(2 * nbonds_ + 1);
        }
        if (site == spec_.L - 1) {
            refresh_channel(2 * nbonds_ + 2);
            refresh_channel(2 * nbonds_ + 3);
        }
    }
}

void KmcSimulator::rebuild_rates() {
    for (std::size_t c = 0; c < rates_.size(); ++c) refresh_channel(static_cast<int>(c));
    total_rate_ = 0.0;
    for (double r : rates_) total_rate_ += r;
}

void KmcSimulator::apply_base_event(int channel) {
    if (channel < nbonds_) {  // hop right across bond
        eta_[channel] -= 1;
        eta_[channel + 1] += 1;
        bond_current_[channel] += 1.0;
        check_bounds(channel + 1);
        refresh_site(channel);
        refresh_site(channel + 1);
    } else if (channel < 2 * nbonds_) {  // hop left
        const int b = channel - nbonds_;
        eta_[b + 1] -= 1;
        eta_[b] += 1;
        bond_current_[b] -= 1.0;
        check_bounds(b);
        refresh_site(b);
        refresh_site(b + 1);
    } else {
        const int last = spec_.L - 1;
        switch (channel - 2 * nbonds_) {
            case 0: eta_[0] += 1; break;
            case 1: eta_[0] -= 1; break;
            case 2: eta_[last] += 1; break;
            case 3: eta_[last] -= 1; break;
        }
        const int site = channel - 2 * nbonds_ < 2 ? 0 : last;
        check_bounds(site);
        refresh_site(site);
    }
}

void KmcSimulator::apply_thermal_event(int channel) {
    if (channel < nbonds_) {
        const int total = eta_[channel] + eta_[channel + 1];
        if (total > 0) {
            auto& cdf = kernel_cache_;
            if (static_cast<int>(cdf.size()) <= total)
                cdf.resize(static_cast<std::size_t>(total) + 1);
            if (cdf[total].empty()) {
                const auto pmf = bond_kernel(spec_.family, spec_.shape).pmf(total);
                cdf[total] = DiscreteCdf(pmf);
            }
            const int r = cdf[total].sample(rng_);
            const int new_right = total - r;
            bond_current_[channel] += new_right - eta_[channel + 1];
            eta_[channel] = r;
            eta_[channel + 1] = new_right;
            check_bounds(channel);
            check_bounds(channel + 1);
        }
    } else {
        const bool left = channel == nbonds_;
        const int site = left ? 0 : spec_.L - 1;
        eta_[site] = (left ? bath_left_ : bath_right_).sample(rng_);
        check_bounds(site);
    }
}

void KmcSimulator::fire_event() {
    const auto channel = static_cast<int>(rng_.weighted_index(rates_, total_rate_));
    if (thermal_) {
        apply_thermal_event(channel);
    } else {
        apply_base_event(channel);
        total_rate_ = 0.0;
        for (double r : rates_) total_rate_ += r;
    }
    if (++events_ % kRateAuditPeriod == 0) {
        const double before = total_rate_;
        rebuild_rates();
        if (std::fabs(before - total_rate_) > 1e-9 * std::max(1.0, total_rate_))
            throw std::logic_error("KmcSimulator: incremental rate drift detected");
    }
}

void KmcSimulator::step() {
    if (total_rate_ <= 0.0)
        throw std::runtime_error("KmcSimulator: absorbing state (zero total rate)");
    const double dt = rng_.exponential(total_rate_);
    for (int b = 0; b < nbonds_; ++b) drift_integral_[b] += drift(b) * dt;
    time_ += dt;
    fire_event();
}

void KmcSimulator::run_until(double t) {
    while (time_ < t) {
        if (total_rate_ <= 0.0)
            throw std::runtime_error("KmcSimulator: absorbing state (zero total rate)");
        const double dt = rng_.exponential(total_rate_);
        if (time_ + dt >= t) {
            // the clock is memoryless, so the leftover draw can be dropped
            for (int b = 0; b < nbonds_; ++b) drift_integral_[b] += drift(b) * (t - time_);
            time_ = t;
            return;
        }
        for (int b = 0; b < nbonds_; ++b) drift_integral_[b] += drift(b) * dt;
        time_ += dt;
        fire_event();
    }
}

namespace {

struct ReplicaAccumulator {
    std::vector<double> mean;
    std::vector<std::vector<double>> second;
    std::vector<std::vector<double>> batch_means;          // per batch, per site
    std::vector<std::vector<std::vector<double>>> batch_second;
};

constexpr int kBatches = 16;

void run_replica(const ModelSpec& spec, const SamplePlan& plan, int replica,
                 ReplicaAccumulator& out) {
    auto rng = Rng::for_replica(plan.base_seed, static_cast<std::uint64_t>(replica));
    KmcSimulator sim(spec, rng.next_u64());
    const double burn = plan.burn_in < 0.0 ? default_burn_in(spec) : plan.burn_in;
    sim.run_until(burn);

    const int L = spec.L;
    const long per_batch = std::max<long>(1, plan.n_samples / kBatches);
    out.batch_means.assign(kBatches, std::vector<double>(L, 0.0));
    out.batch_second.assign(kBatches,
                            std::vector<std::vector<double>>(L, std::vector<double>(L, 0.0)));
    std::vector<long> batch_count(kBatches, 0);

    double next_time = sim.time();
    for (long s = 0; s < plan.n_samples; ++s) {
        next_time += plan.thinning;
        sim.run_until(next_time);
        const int batch = std::min<int>(kBatches - 1, static_cast<int>(s / per_batch));
        const auto& eta = sim.config();
        for (int i = 0; i < L; ++i) {
            out.batch_means[batch][i] += eta[i];
            for (int l = i; l < L; ++l)
                out.batch_second[batch][i][l] += static_cast<double>(eta[i]) * eta[l];
        }
        batch_count[batch] += 1;
    }
    for (int b = 0; b < kBatches; ++b) {
        for (int i = 0; i < L; ++i) {
            out.batch_means[b][i] /= batch_count[b];
            for (int l = i; l < L; ++l) {
                out.batch_second[b][i][l] /= batch_count[b];
                out.batch_second[b][l][i] = out.batch_second[b][i][l];
            }
        }
    }
}

}  // namespace

StationarySummary sample_stationary(const ModelSpec& spec, const SamplePlan& plan) {
    validate(spec);
    const int L = spec.L;
    std::vector<ReplicaAccumulator> acc(static_cast<std::size_t>(plan.replicas));

    const int workers = std::max(1, plan.threads);
    std::vector<std::future<void>> jobs;
    std::size_t next = 0;
    while (next < acc.size()) {
        jobs.clear();
        const std::size_t stop = std::min(acc.size(), next + static_cast<std::size_t>(workers));
        for (std::size_t r = next; r < stop; ++r)
            jobs.push_back(std::async(std::launch::async, run_replica, std::cref(spec),
                                      std::cref(plan), static_cast<int>(r), std::ref(acc[r])));
        for (auto& j : jobs) j.get();
        next = stop;
    }

    StationarySummary summary;
    summary.replicas = plan.replicas;
    summary.n_samples = plan.n_samples * plan.replicas;
    summary.mean.assign(L, 0.0);
    summary.mean_se.assign(L, 0.0);
    summary.second_moment.assign(L, std::vector<double>(L, 0.0));
    summary.second_moment_se.assign(L, std::vector<double>(L, 0.0));

    const int nbatch = kBatches * plan.replicas;
    for (int i = 0; i < L; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (const auto& a : acc)
            for (int b = 0; b < kBatches; ++b) {
                m1 += a.batch_means[b][i];
                m2 += sqr(a.batch_means[b][i]);
            }
        m1 /= nbatch;
        m2 /= nbatch;
        summary.mean[i] = m1;
        summary.mean_se[i] = std::sqrt(std::max(0.0, m2 - m1 * m1) / (nbatch - 1));
        for (int l = i; l < L; ++l) {
            double s1 = 0.0, s2 = 0.0;
            for (const auto& a : acc)
                for (int b = 0; b < kBatches; ++b) {
                    s1 += a.batch_second[b][i][l];
                    s2 += sqr(a.batch_second[b][i][l]);
                }
            s1 /= nbatch;
            s2 /= nbatch;
            summary.second_moment[i][l] = summary.second_moment[l][i] = s1;
            summary.second_moment_se[i][l] = summary.second_moment_se[l][i] =
                std::sqrt(std::max(0.0, s2 - s1 * s1) / (nbatch - 1));
        }
    }
    return summary;
}

void sample_trajectory(const ModelSpec& spec, const SamplePlan& plan, std::uint64_t replica,
                       const std::function<void(double, const Config&)>& visit) {
    auto rng = Rng::for_replica(plan.base_seed, replica);
    KmcSimulator sim(spec, rng.next_u64());
    const double burn = plan.burn_in < 0.0 ? default_burn_in(spec) : plan.burn_in;
    sim.run_until(burn);
    double next_time = sim.time();
    for (long s = 0; s < plan.n_samples; ++s) {
        next_time += plan.thinning;
        sim.run_until(next_time);
        visit(sim.time(), sim.config());
    }
}

ModelSpec transport_spec(Family family, double shape, int L, double rho_a, double rho_b) {
    ModelSpec spec;
    spec.family = family;
    spec.L = L;
    spec.shape = shape;
    BoundaryRates r;
    switch (family) {
        case Family::SIP:
            r.alpha = 2.0 * rho_a;
            r.gamma = 2.0 * rho_a + 2.0 * shape;
            r.delta = 2.0 * rho_b;
            r.beta = 2.0 * rho_b + 2.0 * shape;
            break;
        case Family::SEP: {
            if (rho_a >= shape || rho_b >= shape)
                throw SpecError("transport_spec: exclusion density must stay below 2j");
            r.alpha = 2.0 * rho_a;
            r.gamma = 2.0 * shape - 2.0 * rho_a;
            r.delta = 2.0 * rho_b;
            r.beta = 2.0 * shape - 2.0 * rho_b;
            break;
        }
        case Family::IRW:
            r.alpha = 2.0 * rho_a;
            r.gamma = 2.0;
            r.delta = 2.0 * rho_b;
            r.beta = 2.0;
            break;
        default: throw SpecError("transport_spec: unsupported family");
    }
    spec.boundary = r;
    return validate(spec), spec;
}

namespace {

struct CurrentRecord {
    double mean_count_current = 0.0;  // bond-averaged jump-count Q(T)/T
    double drift_slope = 0.0;         // bond-averaged [A(T)^2 - A(T/2)^2] / (T/2)
};

CurrentRecord run_current_replica(const ModelSpec& spec, double total_time, double burn_in,
                                  std::uint64_t base, int replica) {
    auto rng = Rng::for_replica(base, static_cast<std::uint64_t>(replica));
    KmcSimulator sim(spec, rng.next_u64());
    // start from occupations near the imposed profile
    const auto rho = reservoir_densities(spec);
    Config eta(static_cast<std::size_t>(spec.L));
    for (int i = 0; i < spec.L; ++i) {
        const double target = rho.rho_a + (rho.rho_b - rho.rho_a) * (i + 1.0) / (spec.L + 1.0);
        eta[i] = static_cast<int>(std::floor(target));
    }
    sim.set_config(eta);
    sim.run_until(burn_in);
    sim.reset_time_and_currents();

    const int nbonds = spec.L - 1;
    sim.run_until(0.5 * total_time);
    const std::vector<double> half = sim.bond_current_drift();
    sim.run_until(total_time);

    CurrentRecord rec;
    for (int b = 0; b < nbonds; ++b) {
        rec.mean_count_current += sim.bond_current()[b] / (nbonds * total_time);
        rec.drift_slope += (sqr(sim.bond_current_drift()[b]) - sqr(half[b])) /
                           (nbonds * 0.5 * total_time);
    }
    return rec;
}

// mean and jackknife standard error of f(leave-one-out average)
template <typename F>
std::pair<double, double> jackknife(const std::vector<double>& samples, F&& transform) {
    const int n = static_cast<int>(samples.size());
    double sum = 0.0;
    for (double s : samples) sum += s;
    const double full = transform(sum / n);
    std::vector<double> loo(static_cast<std::size_t>(n));
    double mean_loo = 0.0;
    for (int i = 0; i < n; ++i) {
        loo[i] = transform((sum - samples[i]) / (n - 1));
        mean_loo += loo[i];
    }
    mean_loo /= n;
    double var = 0.0;
    for (double v : loo) var += sqr(v - mean_loo);
    var *= static_cast<double>(n - 1) / n;
    return {full, std::sqrt(var)};
}

std::vector<CurrentRecord> run_replica_set(const ModelSpec& spec, double total_time,
                                           double burn_in, int replicas, std::uint64_t seed,
                                           int threads) {
    std::vector<CurrentRecord> out(static_cast<std::size_t>(replicas));
    const int workers = std::max(1, threads);
    std::size_t next = 0;
    while (next < out.size()) {
        std::vector<std::future<CurrentRecord>> jobs;
        const std::size_t stop = std::min(out.size(), next + static_cast<std::size_t>(workers));
        for (std::size_t r = next; r < stop; ++r)
            jobs.push_back(std::async(std::launch::async, run_current_replica, std::cref(spec),
                                      total_time, burn_in, seed, static_cast<int>(r)));
        for (std::size_t r = next; r < stop; ++r) out[r] = jobs[r - next].get();
        next = stop;
    }
    return out;
}

}  // namespace

TransportEstimate estimate_transport(Family family, double shape, int L, double rho, double drho,
                                     double total_time, int replicas, std::uint64_t seed,
                                     int threads, double burn_in) {
    if (replicas < 2) throw std::invalid_argument("estimate_transport: need >= 2 replicas");
    if (burn_in < 0.0) burn_in = 10.0 * L;
    // densities (rho + drho, rho): the tuned boundary resistances make the
    // stationary gradient exactly drho / L, so the mean-current estimator of
    // D carries no finite-size bias
    const ModelSpec driven = transport_spec(family, shape, L, rho + drho, rho);
    const ModelSpec balanced = transport_spec(family, shape, L, rho, rho);

    const auto driven_rec =
        run_replica_set(driven, total_time, burn_in, replicas, seed ^ 0x5eedULL, threads);
    const auto balanced_rec =
        run_replica_set(balanced, total_time, burn_in, replicas, seed ^ 0xfaceULL, threads);

    std::vector<double> currents;
    currents.reserve(driven_rec.size());
    for (const auto& rec : driven_rec) currents.push_back(rec.mean_count_current);
    const auto [d_hat, d_se] = jackknife(currents, [&](double j) { return j * L / drho; });

    // the slope of <A^2> between T/2 and T drops the O(1) transient of the
    // integrated-gradient variance; A and the jump count share their mean,
    // but only A keeps the full mobility signal at long times. The walker
    // resistor network of this geometry gives the per-bond variance rate
    // sigma (L-1)/L exactly, hence the finite-size factor.
    std::vector<double> slopes;
    slopes.reserve(balanced_rec.size());
    for (const auto& rec : balanced_rec) slopes.push_back(rec.drift_slope);
    const double green_factor = static_cast<double>(L) / (L - 1);
    const auto [sigma_hat, sigma_se] =
        jackknife(slopes, [&](double s) { return green_factor * s; });

    return {d_hat, d_se, sigma_hat, sigma_se};
}

}  // namespace transport
