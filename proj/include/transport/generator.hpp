#ifndef TRANSPORT_GENERATOR_HPP
#define TRANSPORT_GENERATOR_HPP

#include <Eigen/SparseCore>
#include <cstdint>
#include <functional>
#include <vector>

#include "transport/model.hpp"

namespace transport {

using Config = std::vector<int>;

// Mixed-radix enumeration of occupation vectors with per-site caps,
// lexicographic in eta (site 1 most significant).
class StateSpace {
  public:
    StateSpace(int sites, int uniform_cap);
    StateSpace(int sites, std::vector<int> caps);

    int sites() const { return sites_; }
    int cap(int site) const { return caps_[site]; }
    std::size_t size() const { return size_; }

    std::size_t encode(const Config& eta) const;
    Config decode(std::size_t index) const;

  private:
    int sites_;
    std::vector<int> caps_;
    std::vector<std::size_t> strides_;
    std::size_t size_;
};

struct Transition {
    Config to;
    double rate;
};

// Complete outgoing transition list for a discrete-family configuration.
// `cap` bounds the per-site occupation of emitted targets; anything beyond it
// is dropped and reported through the return value (true = clipped). Base
// families only clip reservoir births; thermalized families also clip bond
// redistributions with total above cap and the resampling tail of the baths.
bool enumerate_transitions(const ModelSpec& spec, const Config& eta, int cap,
                           const std::function<void(const Config&, double)>& emit);

std::vector<Transition> enumerate_transitions(const ModelSpec& spec, const Config& eta, int cap);

struct SparseGenerator {
    StateSpace space;
    Eigen::SparseMatrix<double, Eigen::RowMajor> rates;  // row = source, diagonal = -row sum
    std::vector<char> truncated;                         // per-state clipped-outflow flag
    std::vector<double> clipped_rate;                    // dropped outflow per flagged state

    double row_sum_error() const;       // max |row sum|, should be ~0
    double truncated_outflow() const;   // max clipped rate over flagged states
};

inline constexpr std::size_t kDefaultStateBudget = 5'000'000;

// Materializes the generator on the truncated cube {0..cap}^L ({0..2j}^L for
// exclusion families, where no truncation occurs unless cap < 2j is forced).
// threads > 1 parallelizes row construction; the result is identical.
SparseGenerator build_generator(const ModelSpec& spec, int cap, int threads = 1,
                                std::size_t state_budget = kDefaultStateBudget);

struct StationaryResult {
    Eigen::VectorXd pi;
    double residual;    // max |pi^T Q|
    int iterations;     // 0 for the direct solve
};

// Sparse direct solve of the constrained system [Q^T; 1^T] pi = [0; 1].
StationaryResult stationary_distribution(const SparseGenerator& gen);

// Independent oracle: power iteration on the uniformized chain.
StationaryResult stationary_power_iteration(const SparseGenerator& gen, double tol = 1e-12,
                                            int max_iters = 2'000'000, int threads = 1);

// Max over ordered pairs of |Q(x,y) pi(x) - Q(y,x) pi(y)|.
double check_detailed_balance(const SparseGenerator& gen, const Eigen::VectorXd& pi);

// <prod_i eta_i^{powers_i}> under the distribution pi.
double moment(const SparseGenerator& gen, const Eigen::VectorXd& pi,
              const std::vector<int>& powers);

// <prod_i eta_i!/(eta_i - xi_i)!> under pi (bulk factorial moment).
double factorial_moment(const SparseGenerator& gen, const Eigen::VectorXd& pi,
                        const std::vector<int>& orders);

// Entrywise max difference between the two generators on a common space.
double generator_max_difference(const SparseGenerator& a, const SparseGenerator& b);

}  // namespace transport

#endif
