#include "transport/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "transport/special.hpp"

namespace transport {

double default_dt(const ModelSpec& spec) {
    const auto& t = spec.temperatures();
    const double hot = std::max(t.Ta, t.Tb);
    return 1e-3 * std::min(1.0, 1.0 / (2.0 * spec.shape * hot));
}

BepSimulator::BepSimulator(ModelSpec spec, SdeScheme scheme, std::uint64_t seed)
    : spec_(std::move(spec)),
      scheme_(scheme),
      z_(static_cast<std::size_t>(spec_.L), 0.0),
      dz_(static_cast<std::size_t>(spec_.L), 0.0),
      rng_(seed) {
    validate(spec_);
    if (spec_.family != Family::BEP)
        throw SpecError("BepSimulator drives the diffusion family only");
    dt_ = scheme_.dt > 0.0 ? scheme_.dt
                           : (spec_.bulk_only() ? 1e-3 : default_dt(spec_));
    if (!spec_.bulk_only()) {
        const auto rho = reservoir_densities(spec_);
        for (int i = 0; i < spec_.L; ++i) z_[i] = 0.5 * (rho.rho_a + rho.rho_b);
    }
}

void BepSimulator::set_energies(const std::vector<double>& z) {
    if (z.size() != z_.size()) throw std::invalid_argument("set_energies: wrong length");
    for (double v : z)
        if (v < 0.0) throw std::invalid_argument("set_energies: negative energy");
    z_ = z;
}

double BepSimulator::clamp_fraction() const {
    return steps_ == 0 ? 0.0 : static_cast<double>(clamps_) / static_cast<double>(steps_);
}

void BepSimulator::step() {
    const int L = spec_.L;
    const double k2 = spec_.shape;
    const double sdt = std::sqrt(dt_);
    std::fill(dz_.begin(), dz_.end(), 0.0);

    for (int i = 0; i + 1 < L; ++i) {
        const double zi = std::max(z_[i], 0.0);
        const double zj = std::max(z_[i + 1], 0.0);
        const double delta = -k2 * (zi - zj) * dt_ + std::sqrt(2.0 * zi * zj) * sdt * rng_.normal();
        dz_[i] += delta;
        dz_[i + 1] -= delta;
    }
    if (!spec_.bulk_only()) {
        const auto& t = spec_.temperatures();
        const double z0 = std::max(z_.front(), 0.0);
        dz_.front() +=
            (k2 * t.Ta - 0.5 * z0) * dt_ + std::sqrt(2.0 * t.Ta * z0) * sdt * rng_.normal();
        const double zl = std::max(z_.back(), 0.0);
        dz_.back() +=
            (k2 * t.Tb - 0.5 * zl) * dt_ + std::sqrt(2.0 * t.Tb * zl) * sdt * rng_.normal();
    }

    bool clamped = false;
    for (int i = 0; i < L; ++i) {
        z_[i] += dz_[i];
        if (z_[i] < 0.0) {
            const double before = z_[i];
            z_[i] = scheme_.positivity == SdeScheme::Positivity::Reflection ? -z_[i] : 0.0;
            clamped_mass_ += z_[i] - before;
            clamped = true;
        }
    }
    if (clamped) ++clamps_;
    ++steps_;
    time_ += dt_;
}

void BepSimulator::run_until(double t) {
    while (time_ < t) step();
}

JumpEnergySimulator::JumpEnergySimulator(ModelSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)),
      z_(static_cast<std::size_t>(spec_.L), 0.0),
      bond_current_(static_cast<std::size_t>(spec_.L > 0 ? spec_.L - 1 : 0), 0.0),
      rng_(seed) {
    validate(spec_);
    if (spec_.family != Family::KMP && spec_.family != Family::ThBEP)
        throw SpecError("JumpEnergySimulator drives the redistribution families only");
    channels_ = (spec_.L - 1) + (spec_.bulk_only() ? 0 : 2);
    if (channels_ == 0)
        throw SpecError("JumpEnergySimulator: closed single site has no dynamics");
    if (!spec_.bulk_only()) {
        const auto rho = reservoir_densities(spec_);
        for (int i = 0; i < spec_.L; ++i) z_[i] = 0.5 * (rho.rho_a + rho.rho_b);
    }
}

void JumpEnergySimulator::set_energies(const std::vector<double>& z) {
    if (z.size() != z_.size()) throw std::invalid_argument("set_energies: wrong length");
    for (double v : z)
        if (v < 0.0) throw std::invalid_argument("set_energies: negative energy");
    z_ = z;
}

void JumpEnergySimulator::reset_time_and_currents() {
    time_ = 0.0;
    std::fill(bond_current_.begin(), bond_current_.end(), 0.0);
}

void JumpEnergySimulator::fire_event() {
    const int nbonds = spec_.L - 1;
    const auto channel = static_cast<int>(rng_.uniform_index(static_cast<std::uint64_t>(channels_)));
    if (channel < nbonds) {
        const double total = z_[channel] + z_[channel + 1];
        const double x = spec_.family == Family::KMP ? rng_.uniform()
                                                     : rng_.beta(spec_.shape, spec_.shape);
        const double new_right = (1.0 - x) * total;
        bond_current_[channel] += new_right - z_[channel + 1];
        z_[channel] = x * total;
        z_[channel + 1] = new_right;
    } else {
        const auto& t = spec_.temperatures();
        const bool left = channel == nbonds;
        const int site = left ? 0 : spec_.L - 1;
        const double temp = left ? t.Ta : t.Tb;
        // baths resample from the family's own equilibrium marginal:
        // exponential of mean T, or Gamma(2k, 2T)
        z_[site] = spec_.family == Family::KMP ? rng_.exponential(1.0 / temp)
                                               : rng_.gamma(spec_.shape, 2.0 * temp);
    }
}

void JumpEnergySimulator::step() {
    time_ += rng_.exponential(static_cast<double>(channels_));
    fire_event();
}

void JumpEnergySimulator::run_until(double t) {
    while (time_ < t) {
        const double dt = rng_.exponential(static_cast<double>(channels_));
        if (time_ + dt >= t) {
            time_ = t;
            return;
        }
        time_ += dt;
        fire_event();
    }
}

namespace {

struct EnergyBatch {
    std::vector<std::vector<double>> means;                 // batch x site
    std::vector<std::vector<std::vector<double>>> seconds;  // batch x site x site
    std::vector<std::vector<double>> higher;                // batch x order (z_1^1..z_1^4)
    double clamp_fraction = 0.0;
};

constexpr int kBatches = 16;

template <typename Sim>
EnergyBatch run_energy_replica(const ModelSpec& spec, const SamplePlan& plan, Sim&& sim) {
    const int L = spec.L;
    const double burn = plan.burn_in < 0.0 ? default_burn_in(spec) : plan.burn_in;
    sim.run_until(burn);

    EnergyBatch out;
    out.means.assign(kBatches, std::vector<double>(L, 0.0));
    out.seconds.assign(kBatches,
                       std::vector<std::vector<double>>(L, std::vector<double>(L, 0.0)));
    out.higher.assign(kBatches, std::vector<double>(4, 0.0));
    std::vector<long> counts(kBatches, 0);
    const long per_batch = std::max<long>(1, plan.n_samples / kBatches);

    double next_time = sim.time();
    for (long s = 0; s < plan.n_samples; ++s) {
        next_time += plan.thinning;
        sim.run_until(next_time);
        const int batch = std::min<int>(kBatches - 1, static_cast<int>(s / per_batch));
        const auto& z = sim.energies();
        for (int i = 0; i < L; ++i) {
            out.means[batch][i] += z[i];
            for (int l = i; l < L; ++l) out.seconds[batch][i][l] += z[i] * z[l];
        }
        double p = 1.0;
        for (int n = 0; n < 4; ++n) {
            p *= z[0];
            out.higher[batch][n] += p;
        }
        counts[batch] += 1;
    }
    for (int b = 0; b < kBatches; ++b) {
        for (int i = 0; i < L; ++i) {
            out.means[b][i] /= counts[b];
            for (int l = i; l < L; ++l) {
                out.seconds[b][i][l] /= counts[b];
                out.seconds[b][l][i] = out.seconds[b][i][l];
            }
        }
        for (int n = 0; n < 4; ++n) out.higher[b][n] /= counts[b];
    }
    return out;
}

}  // namespace

EnergySummary sample_stationary_energy(const ModelSpec& spec, const SamplePlan& plan,
                                       const SdeScheme& scheme) {
    validate(spec);
    if (!is_energy(spec.family))
        throw SpecError("sample_stationary_energy: discrete family, use sample_stationary");
    const int L = spec.L;

    std::vector<EnergyBatch> acc(static_cast<std::size_t>(plan.replicas));
    const int workers = std::max(1, plan.threads);
    std::size_t next = 0;
    while (next < acc.size()) {
        std::vector<std::future<EnergyBatch>> jobs;
        const std::size_t stop = std::min(acc.size(), next + static_cast<std::size_t>(workers));
        for (std::size_t r = next; r < stop; ++r) {
            jobs.push_back(std::async(std::launch::async, [&, r]() {
                auto rng = Rng::for_replica(plan.base_seed, r);
                const std::uint64_t s = rng.next_u64();
                if (spec.family == Family::BEP) {
                    BepSimulator sim(spec, scheme, s);
                    auto out = run_energy_replica(spec, plan, sim);
                    out.clamp_fraction = sim.clamp_fraction();
                    return out;
                }
                JumpEnergySimulator sim(spec, s);
                return run_energy_replica(spec, plan, sim);
            }));
        }
        for (std::size_t r = next; r < stop; ++r) acc[r] = jobs[r - next].get();
        next = stop;
    }

    EnergySummary summary;
    summary.mean.assign(L, 0.0);
    summary.mean_se.assign(L, 0.0);
    summary.second_moment.assign(L, std::vector<double>(L, 0.0));
    summary.second_moment_se.assign(L, std::vector<double>(L, 0.0));
    summary.higher.assign(4, 0.0);
    summary.higher_se.assign(4, 0.0);

    const int nbatch = kBatches * plan.replicas;
    auto reduce = [&](auto&& get, double& mean, double& se) {
        double m1 = 0.0, m2 = 0.0;
        for (const auto& a : acc)
            for (int b = 0; b < kBatches; ++b) {
                const double v = get(a, b);
                m1 += v;
                m2 += v * v;
            }
        m1 /= nbatch;
        m2 /= nbatch;
        mean = m1;
        se = std::sqrt(std::max(0.0, m2 - m1 * m1) / (nbatch - 1));
    };

    for (int i = 0; i < L; ++i) {
        reduce([&](const EnergyBatch& a, int b) { return a.means[b][i]; }, summary.mean[i],
               summary.mean_se[i]);
        for (int l = i; l < L; ++l) {
            reduce([&](const EnergyBatch& a, int b) { return a.seconds[b][i][l]; },
                   summary.second_moment[i][l], summary.second_moment_se[i][l]);
            summary.second_moment[l][i] = summary.second_moment[i][l];
            summary.second_moment_se[l][i] = summary.second_moment_se[i][l];
        }
    }
    for (int n = 0; n < 4; ++n)
        reduce([&](const EnergyBatch& a, int b) { return a.higher[b][n]; }, summary.higher[n],
               summary.higher_se[n]);
    for (const auto& a : acc) summary.clamp_fraction += a.clamp_fraction / acc.size();
    return summary;
}

namespace {

struct KmpCurrentRecord {
    double mean_current = 0.0;
    double mid_half = 0.0;
    double mid_full = 0.0;
};

KmpCurrentRecord run_kmp_replica(const ModelSpec& spec, double total_time, std::uint64_t base,
                                 int replica) {
    auto rng = Rng::for_replica(base, static_cast<std::uint64_t>(replica));
    JumpEnergySimulator sim(spec, rng.next_u64());
    sim.run_until(default_burn_in(spec));
    sim.reset_time_and_currents();

    KmpCurrentRecord rec;
    const int mid = (spec.L - 1) / 2;
    sim.run_until(0.5 * total_time);
    rec.mid_half = sim.bond_current()[mid];
    sim.run_until(total_time);
    rec.mid_full = sim.bond_current()[mid];
    double acc = 0.0;
    for (double q : sim.bond_current()) acc += q;
    rec.mean_current = acc / (static_cast<double>(spec.L - 1) * total_time);
    return rec;
}

}  // namespace

TransportEstimate estimate_transport_kmp(int L, double temperature, double dT, double total_time,
                                         int replicas, std::uint64_t seed, int threads) {
    if (replicas < 2) throw std::invalid_argument("estimate_transport_kmp: need >= 2 replicas");
    ModelSpec driven{Family::KMP, L, 1.0, BoundaryTemperatures{temperature + dT, temperature}};
    ModelSpec balanced{Family::KMP, L, 1.0, BoundaryTemperatures{temperature, temperature}};

    std::vector<KmpCurrentRecord> driven_rec(static_cast<std::size_t>(replicas));
    std::vector<KmpCurrentRecord> balanced_rec(static_cast<std::size_t>(replicas));
    const int workers = std::max(1, threads);
    auto run_set = [&](const ModelSpec& spec, std::vector<KmpCurrentRecord>& out,
                       std::uint64_t salt) {
        std::size_t next = 0;
        while (next < out.size()) {
            std::vector<std::future<KmpCurrentRecord>> jobs;
            const std::size_t stop =
                std::min(out.size(), next + static_cast<std::size_t>(workers));
            for (std::size_t r = next; r < stop; ++r)
                jobs.push_back(std::async(std::launch::async, run_kmp_replica, std::cref(spec),
                                          total_time, seed ^ salt, static_cast<int>(r)));
            for (std::size_t r = next; r < stop; ++r) out[r] = jobs[r - next].get();
            next = stop;
        }
    };
    run_set(driven, driven_rec, 0x5eedULL);
    run_set(balanced, balanced_rec, 0xfaceULL);

    double dsum = 0.0;
    std::vector<double> dvals;
    for (const auto& rec : driven_rec) {
        dvals.push_back(rec.mean_current * L / dT);
        dsum += dvals.back();
    }
    const double d_hat = dsum / replicas;
    double dvar = 0.0;
    for (double v : dvals) dvar += sqr(v - d_hat);
    const double d_se = std::sqrt(dvar / (replicas * (replicas - 1.0)));

    double ssum = 0.0;
    std::vector<double> svals;
    for (const auto& rec : balanced_rec) {
        svals.push_back((sqr(rec.mid_full) - sqr(rec.mid_half)) / (0.5 * total_time));
        ssum += svals.back();
    }
    const double s_hat = ssum / replicas;
    double svar = 0.0;
    for (double v : svals) svar += sqr(v - s_hat);
    const double s_se = std::sqrt(svar / (replicas * (replicas - 1.0)));

    return {d_hat, d_se, s_hat, s_se};
}

}  // namespace transport
