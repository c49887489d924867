#ifndef TRANSPORT_KMC_HPP
#define TRANSPORT_KMC_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "transport/generator.hpp"
#include "transport/model.hpp"
#include "transport/rng.hpp"

namespace transport {

struct SamplePlan {
    double burn_in = -1.0;  // < 0 selects the 10 L^2 diffusive default
    long n_samples = 10000;
    double thinning = 1.0;
    int replicas = 1;
    std::uint64_t base_seed = 1;
    int threads = 1;
};

double default_burn_in(const ModelSpec& spec);

// Continuous-time event chain for the discrete families. Current convention:
// Q_{i,i+1} counts left-to-right transfers positively.
class KmcSimulator {
  public:
    KmcSimulator(ModelSpec spec, std::uint64_t seed);

    const Config& config() const { return eta_; }
    double time() const { return time_; }
    const std::vector<double>& bond_current() const { return bond_current_; }
    // Time integral of the instantaneous drift of each bond current; same
    // mean as the jump count.
    const std::vector<double>& bond_current_drift() const { return drift_integral_; }
    double total_rate() const { return total_rate_; }

    void set_config(const Config& eta);
    void reset_time_and_currents();
    // One event, advancing the clock by its exponential holding time.
    void step();
    // Advance to exactly t; the state is the chain's value at t.
    void run_until(double t);
    long long events() const { return events_; }

  private:
    void rebuild_rates();
    void fire_event();
    void refresh_channel(int channel);
    void refresh_site(int site);
    void apply_base_event(int channel);
    void apply_thermal_event(int channel);
    void check_bounds(int site) const;
    double drift(int bond) const;

    ModelSpec spec_;
    bool thermal_;
    int nbonds_;
    Config eta_;
    double time_ = 0.0;
    long long events_ = 0;
    std::vector<double> rates_;
    double total_rate_ = 0.0;
    std::vector<double> bond_current_;
    std::vector<double> drift_integral_;
    Rng rng_;
    std::vector<DiscreteCdf> kernel_cache_;  // indexed by bond total
    DiscreteCdf bath_left_, bath_right_;
    int bath_cap_ = 0;
};

struct StationarySummary {
    std::vector<double> mean;
    std::vector<double> mean_se;
    std::vector<std::vector<double>> second_moment;     // <eta_i eta_l>
    std::vector<std::vector<double>> second_moment_se;
    long n_samples = 0;
    int replicas = 0;

    double covariance(int i, int l) const {
        return second_moment[i][l] - mean[i] * mean[l];
    }
};

// Batch-means sampling of the stationary state, replicas in parallel.
StationarySummary sample_stationary(const ModelSpec& spec, const SamplePlan& plan);

// Single-replica trajectory sampling with a visitor (used by the CLI dump).
void sample_trajectory(const ModelSpec& spec, const SamplePlan& plan, std::uint64_t replica,
                       const std::function<void(double, const Config&)>& visit);

struct TransportEstimate {
    double diffusivity = 0.0;
    double diffusivity_se = 0.0;
    double mobility = 0.0;
    double mobility_se = 0.0;
};

// Boundary rates that impose (rho_a, rho_b) with both boundary resistances
// equal to 1/2, so the stationary gradient is exactly (rho_a - rho_b) / L.
ModelSpec transport_spec(Family family, double shape, int L, double rho_a, double rho_b);

// D from the mean current at densities (rho + drho, rho); sigma from the
// integrated-current variance at equilibrium density rho. Jackknife errors
// over replicas. Replicas start on the stationary profile, so burn_in only
// needs to thermalize local fluctuations (default 10 L time units).
TransportEstimate estimate_transport(Family family, double shape, int L, double rho, double drho,
                                     double total_time, int replicas, std::uint64_t seed,
                                     int threads = 1, double burn_in = -1.0);

}  // namespace transport

#endif
