#include "yamabe/quadrature.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

namespace yamabe::quad {

SpherePoints balanced_sphere_points(int m, int base, std::uint64_t seed) {
    if (m < 1 || base < 1) throw std::invalid_argument("sphere point set needs m >= 1 and base >= 1");
    // Sylvester-Hadamard order: smallest power of two exceeding m, so that
    // columns 1..m exist and are mutually orthogonal with zero mean.
    int h = 1;
    while (h <= m) h *= 2;
    auto sign = [](int row, int col) { return (__builtin_popcount(static_cast<unsigned>(row & col)) & 1) ? -1.0 : 1.0; };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    SpherePoints pts;
    pts.dim = m;
    pts.xyz.reserve(static_cast<std::size_t>(base) * static_cast<std::size_t>(m) *
                    static_cast<std::size_t>(h) * 2 * static_cast<std::size_t>(m));
    std::vector<double> x(static_cast<std::size_t>(m));
    for (int b = 0; b < base; ++b) {
        double nrm = 0.0;
        for (double& v : x) {
            v = g(rng);
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        for (double& v : x) v /= nrm;
        for (int shift = 0; shift < m; ++shift) {
            for (int row = 0; row < h; ++row) {
                for (double pm : {1.0, -1.0}) {
                    for (int a = 0; a < m; ++a) {
                        const double c = x[static_cast<std::size_t>((a + shift) % m)];
                        pts.xyz.push_back(pm * sign(row, a + 1) * c);
                    }
                }
            }
        }
    }
    return pts;
}

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix.
Rule gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("quadrature order must be positive");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        j(k, k - 1) = j(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    Rule r;
    r.x.resize(static_cast<std::size_t>(order));
    r.w.resize(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) {
        r.x[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
        const double v0 = es.eigenvectors()(0, k);
        r.w[static_cast<std::size_t>(k)] = 2.0 * v0 * v0;
    }
    return r;
}

Rule composite(double a, double b, int panels, int order) {
    if (!(b > a) || panels < 1) throw std::invalid_argument("invalid composite rule");
    const Rule base = gauss_legendre(order);
    Rule r;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (std::size_t k = 0; k < base.x.size(); ++k) {
            r.x.push_back(lo + 0.5 * h * (base.x[k] + 1.0));
            r.w.push_back(0.5 * h * base.w[k]);
        }
    }
    return r;
}

std::vector<double> shifted_sobol(int d, std::size_t count, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("Sobol dimension must be positive");
    boost::random::sobol eng(static_cast<std::size_t>(d));
    // Skip the origin, which is the first point of every Sobol sequence.
    eng.discard(static_cast<std::uintmax_t>(d));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> shift(static_cast<std::size_t>(d));
    for (double& s : shift) s = u(rng);
    const double inv = std::ldexp(1.0, -64);
    std::vector<double> out(count * static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < count; ++k) {
        for (int a = 0; a < d; ++a) {
            double v = static_cast<double>(eng()) * inv + shift[static_cast<std::size_t>(a)];
            if (v >= 1.0) v -= 1.0;
            out[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = v;
        }
    }
    return out;
}

double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> nd(0.0, 1.0);
    return boost::math::quantile(nd, p);
}

}  // namespace yamabe::quad
