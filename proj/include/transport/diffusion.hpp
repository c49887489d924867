#ifndef TRANSPORT_DIFFUSION_HPP
#define TRANSPORT_DIFFUSION_HPP

#include <cstdint>
#include <vector>

#include "transport/kmc.hpp"
#include "transport/model.hpp"
#include "transport/rng.hpp"

namespace transport {

struct SdeScheme {
    enum class Positivity { FullTruncation, Reflection };
    double dt = -1.0;  // < 0 selects the stiffness-scaled default
    Positivity positivity = Positivity::FullTruncation;
};

// 1e-3 * min(1, 1/(4k max(Ta, Tb))); weak order 1.
double default_dt(const ModelSpec& spec);

// Euler-Maruyama integrator for the energy-diffusion chain. Bond noise is
// applied antisymmetrically, so the closed chain conserves the total energy
// up to rounding; boundary sites feel the Ornstein-Uhlenbeck-type baths.
class BepSimulator {
  public:
    BepSimulator(ModelSpec spec, SdeScheme scheme, std::uint64_t seed);

    const std::vector<double>& energies() const { return z_; }
    void set_energies(const std::vector<double>& z);
    double time() const { return time_; }
    long long clamped_steps() const { return clamps_; }
    long long steps() const { return steps_; }
    double clamp_fraction() const;
    // net mass created by the positivity policy (exact conservation audit)
    double clamped_mass() const { return clamped_mass_; }

    void step();
    void run_until(double t);

  private:
    ModelSpec spec_;
    SdeScheme scheme_;
    double dt_;
    std::vector<double> z_;
    std::vector<double> dz_;
    double time_ = 0.0;
    long long steps_ = 0;
    long long clamps_ = 0;
    double clamped_mass_ = 0.0;
    Rng rng_;
};

// Event-driven simulator for the redistribution models (uniform shares with
// exponential baths, or Beta(2k,2k) shares with Gamma(2k, 2T) baths).
class JumpEnergySimulator {
  public:
    JumpEnergySimulator(ModelSpec spec, std::uint64_t seed);

    const std::vector<double>& energies() const { return z_; }
    void set_energies(const std::vector<double>& z);
    double time() const { return time_; }
    const std::vector<double>& bond_current() const { return bond_current_; }
    void reset_time_and_currents();

    void step();
    void run_until(double t);

  private:
    void fire_event();

    ModelSpec spec_;
    std::vector<double> z_;
    std::vector<double> bond_current_;
    double time_ = 0.0;
    int channels_;
    Rng rng_;
};

struct EnergySummary {
    std::vector<double> mean;
    std::vector<double> mean_se;
    std::vector<std::vector<double>> second_moment;
    std::vector<std::vector<double>> second_moment_se;
    std::vector<double> higher;     // single-site moments <z_1^n>, n = 1..4
    std::vector<double> higher_se;
    double clamp_fraction = 0.0;

    double covariance(int i, int l) const {
        return second_moment[i][l] - mean[i] * mean[l];
    }
};

// Stationary moments of an energy model; dispatches on the family.
EnergySummary sample_stationary_energy(const ModelSpec& spec, const SamplePlan& plan,
                                       const SdeScheme& scheme = {});

// D and sigma of the uniform-redistribution chain from its energy currents.
TransportEstimate estimate_transport_kmp(int L, double temperature, double dT,
                                         double total_time, int replicas, std::uint64_t seed,
                                         int threads = 1);

}  // namespace transport

#endif
