#pragma once

// Quadrature building blocks shared by the corrector, the energy constants
// and the scaling study.

#include <cstdint>
#include <vector>

namespace yamabe::quad {

/// Points on the unit sphere S^{m-1} (row-major, count x m) whose empirical
/// moments of degree <= 2 and all odd moments equal the uniform-measure ones
/// exactly. Built from `base` pseudo-random directions by cyclic coordinate
/// shifts, sign patterns from the columns of a Sylvester-Hadamard matrix, and
/// antipodal pairing.
struct SpherePoints {
    int dim = 0;
    std::vector<double> xyz;
    std::size_t size() const noexcept { return dim == 0 ? 0 : xyz.size() / static_cast<std::size_t>(dim); }
    const double* point(std::size_t k) const { return xyz.data() + k * static_cast<std::size_t>(dim); }
};

SpherePoints balanced_sphere_points(int m, int base, std::uint64_t seed);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> x, w;
};
Rule gauss_legendre(int order);

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
Rule composite(double a, double b, int panels, int order);

/// Randomized (Cranley-Patterson shifted) Sobol points in [0,1)^d, row-major.
std::vector<double> shifted_sobol(int d, std::size_t count, std::uint64_t seed);

/// Inverse standard normal CDF.
double normal_quantile(double p);

}  // namespace yamabe::quad
