#ifndef TRANSPORT_TEST_HELPERS_HPP
#define TRANSPORT_TEST_HELPERS_HPP

#include <cmath>
#include <vector>

#include "transport/model.hpp"

namespace transport::test {

inline ModelSpec particle_spec(Family family, int L, double shape, double alpha, double gamma,
                               double delta, double beta) {
    ModelSpec spec;
    spec.family = family;
    spec.L = L;
    spec.shape = shape;
    spec.boundary = BoundaryRates{alpha, gamma, delta, beta};
    return spec;
}

inline ModelSpec energy_spec(Family family, int L, double shape, double Ta, double Tb) {
    ModelSpec spec;
    spec.family = family;
    spec.L = L;
    spec.shape = shape;
    spec.boundary = BoundaryTemperatures{Ta, Tb};
    return spec;
}

inline ModelSpec bulk_spec(Family family, int L, double shape) {
    ModelSpec spec;
    spec.family = family;
    spec.L = L;
    spec.shape = shape;
    spec.boundary = BulkOnly{};
    return spec;
}

}  // namespace transport::test

#endif
