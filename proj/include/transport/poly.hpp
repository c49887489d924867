#ifndef TRANSPORT_POLY_HPP
#define TRANSPORT_POLY_HPP

#include <map>
#include <vector>

#include "transport/model.hpp"

namespace transport {

// Sparse polynomial in the site variables z_1..z_L, used to apply the
// energy-diffusion generator to duality functions without discretization.
class Poly {
  public:
    explicit Poly(int nvars) : nvars_(nvars) {}

    static Poly monomial(std::vector<int> exponents, double coeff);

    int nvars() const { return nvars_; }
    void add_term(const std::vector<int>& exponents, double coeff);

    Poly operator+(const Poly& other) const;
    Poly operator-(const Poly& other) const;
    Poly scaled(double factor) const;
    Poly derivative(int var) const;
    Poly times_var(int var) const;

    double eval(const std::vector<double>& z) const;
    double max_abs_coeff() const;
    const std::map<std::vector<int>, double>& terms() const { return terms_; }

  private:
    int nvars_;
    std::map<std::vector<int>, double> terms_;
};

// [L^{BEP} f] including the reservoir terms; bulk_only specs skip them.
Poly bep_generator_apply(const ModelSpec& spec, const Poly& f);

}  // namespace transport

#endif
