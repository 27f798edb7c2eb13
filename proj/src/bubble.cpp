#include "yamabe/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace yamabe {

Dimension::Dimension(int n) : n_(n) {
    if (n < 3 || n > kMaxDim) {
        throw std::invalid_argument("dimension must lie in [3, " + std::to_string(kMaxDim) +
                                    "], got " + std::to_string(n));
    }
}

void require_main_range(Dimension n) {
    if (n.value() < 8) {
        throw std::invalid_argument("operation requires n >= 8, got " + std::to_string(n.value()));
    }
}

HalfSpacePoint::HalfSpacePoint(std::vector<double> z_, double t_) : z(std::move(z_)), t(t_) {}

double HalfSpacePoint::z_norm_sq() const noexcept {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
}

double HalfSpacePoint::norm() const noexcept { return std::sqrt(z_norm_sq() + t * t); }

SmallVec HalfSpacePoint::coords() const {
    SmallVec y(static_cast<Eigen::Index>(z.size() + 1));
    for (std::size_t i = 0; i < z.size(); ++i) y[static_cast<Eigen::Index>(i)] = z[i];
    y[static_cast<Eigen::Index>(z.size())] = t;
    return y;
}

HalfSpacePoint HalfSpacePoint::from_coords(std::span<const double> y) {
    if (y.empty()) throw std::invalid_argument("empty coordinate vector");
    return HalfSpacePoint(std::vector<double>(y.begin(), y.end() - 1), y.back());
}

void check_point(const HalfSpacePoint& y, Dimension n) {
    if (static_cast<int>(y.z.size()) != n.tangential()) {
        throw std::invalid_argument("point has " + std::to_string(y.z.size()) +
                                    " tangential coordinates, expected " +
                                    std::to_string(n.tangential()));
    }
    if (!(y.t >= 0.0) || !std::isfinite(y.t)) {
        throw std::domain_error("normal coordinate must be finite and t >= 0");
    }
    for (double v : y.z) {
        if (!std::isfinite(v)) throw std::domain_error("non-finite tangential coordinate");
    }
}

namespace {

double denom(const HalfSpacePoint& y) {
    const double a = 1.0 + y.t;
    return a * a + y.z_norm_sq();
}

}  // namespace

double eval_bubble(const HalfSpacePoint& y, Dimension n) {
    check_point(y, n);
    return std::pow(denom(y), -n.weight());
}

double eval_bubble_family(const HalfSpacePoint& y, double delta, Dimension n) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    check_point(y, n);
    HalfSpacePoint x = y;
    for (double& v : x.z) v /= delta;
    x.t /= delta;
    return std::pow(delta, -n.weight()) * std::pow(denom(x), -n.weight());
}

// With Y = (z, 1+t), U = |Y|^{2-n}; grad U = -(n-2) Y D^{-n/2}.
SmallVec bubble_gradient(const HalfSpacePoint& y, Dimension n) {
    check_point(y, n);
    const int nn = n.value();
    const double dn = std::pow(denom(y), -0.5 * nn);
    SmallVec g(nn);
    for (int i = 0; i < nn - 1; ++i) g[i] = -(nn - 2) * y.z[static_cast<std::size_t>(i)] * dn;
    g[nn - 1] = -(nn - 2) * (1.0 + y.t) * dn;
    return g;
}

// d_ab U = -(n-2) [delta_ab D^{-n/2} - n Y_a Y_b D^{-n/2-1}].
SmallMat bubble_hessian(const HalfSpacePoint& y, Dimension n) {
    check_point(y, n);
    const int nn = n.value();
    const double d = denom(y);
    const double dn = std::pow(d, -0.5 * nn);
    SmallVec yy = y.coords();
    yy[nn - 1] += 1.0;
    SmallMat h(nn, nn);
    for (int a = 0; a < nn; ++a) {
        for (int b = 0; b < nn; ++b) {
            h(a, b) = -(nn - 2) * ((a == b ? 1.0 : 0.0) - nn * yy[a] * yy[b] / d) * dn;
        }
    }
    return h;
}

double eval_kernel(int b, const HalfSpacePoint& y, Dimension n) {
    const int nn = n.value();
    if (b < 1 || b > nn) throw std::out_of_range("kernel index must lie in 1..n");
    check_point(y, n);
    const double dn = std::pow(denom(y), -0.5 * nn);
    if (b < nn) return -(nn - 2) * y.z[static_cast<std::size_t>(b - 1)] * dn;
    // (n-2)/2 U + y.grad U collapses to (n-2)/2 D^{-n/2} (1 - t^2 - |z|^2).
    return n.weight() * dn * (1.0 - y.t * y.t - y.z_norm_sq());
}

double kernel_dt(int b, const HalfSpacePoint& y, Dimension n) {
    const int nn = n.value();
    if (b < 1 || b > nn) throw std::out_of_range("kernel index must lie in 1..n");
    check_point(y, n);
    const double d = denom(y);
    const double dn = std::pow(d, -0.5 * nn);
    const double a = 1.0 + y.t;
    if (b < nn) return nn * (nn - 2) * y.z[static_cast<std::size_t>(b - 1)] * a * dn / d;
    const double s = 1.0 - y.t * y.t - y.z_norm_sq();
    return n.weight() * (-nn * a * dn / d * s - 2.0 * y.t * dn);
}

Residuals residuals(const HalfSpacePoint& y, Dimension n) {
    check_point(y, n);
    const int nn = n.value();
    Residuals res;

    const SmallMat h = bubble_hessian(y, n);
    res.interior = -h.trace();
    res.interior_scale = h.diagonal().cwiseAbs().sum();

    const HalfSpacePoint yb(y.z, 0.0);
    const double u = eval_bubble(yb, n);
    const double du_dt = bubble_gradient(yb, n)[nn - 1];
    const double nonlin = (nn - 2) * std::pow(u, static_cast<double>(nn) / (nn - 2));
    res.boundary = du_dt + nonlin;
    res.boundary_scale = std::abs(du_dt) + std::abs(nonlin);

    const double pot = nn * std::pow(u, 2.0 / (nn - 2));
    res.linearized.resize(static_cast<std::size_t>(nn));
    res.linearized_scale.resize(static_cast<std::size_t>(nn));
    for (int b = 1; b <= nn; ++b) {
        const double jt = kernel_dt(b, yb, n);
        const double jv = pot * eval_kernel(b, yb, n);
        res.linearized[static_cast<std::size_t>(b - 1)] = jt + jv;
        res.linearized_scale[static_cast<std::size_t>(b - 1)] = std::abs(jt) + std::abs(jv);
    }
    return res;
}

BubbleRadial bubble_radial(double r, double t, Dimension n) {
    const int nn = n.value();
    const double a = 1.0 + t;
    const double d = a * a + r * r;
    BubbleRadial b;
    b.u = std::pow(d, -n.weight());
    b.d_over = std::pow(d, -0.5 * nn);
    b.dt = -(nn - 2) * a * b.d_over;
    b.dr = -(nn - 2) * r * b.d_over;
    return b;
}

SmallVec fd_gradient(const std::function<double(const HalfSpacePoint&)>& f,
                     const HalfSpacePoint& y, double h) {
    const SmallVec c = y.coords();
    SmallVec g(c.size());
    for (Eigen::Index a = 0; a < c.size(); ++a) {
        SmallVec p = c, m = c;
        p[a] += h;
        m[a] -= h;
        g[a] = (f(HalfSpacePoint::from_coords({p.data(), static_cast<std::size_t>(p.size())})) -
                f(HalfSpacePoint::from_coords({m.data(), static_cast<std::size_t>(m.size())}))) /
               (2.0 * h);
    }
    return g;
}

SmallMat fd_hessian(const std::function<double(const HalfSpacePoint&)>& f,
                    const HalfSpacePoint& y, double h) {
    const SmallVec c = y.coords();
    const Eigen::Index d = c.size();
    auto at = [&](const SmallVec& v) {
        return f(HalfSpacePoint::from_coords({v.data(), static_cast<std::size_t>(v.size())}));
    };
    SmallMat hm(d, d);
    const double f0 = at(c);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a; b < d; ++b) {
            if (a == b) {
                SmallVec p = c, m = c;
                p[a] += h;
                m[a] -= h;
                hm(a, a) = (at(p) - 2.0 * f0 + at(m)) / (h * h);
            } else {
                SmallVec pp = c, pm = c, mp = c, mm = c;
                pp[a] += h; pp[b] += h;
                pm[a] += h; pm[b] -= h;
                mp[a] -= h; mp[b] += h;
                mm[a] -= h; mm[b] -= h;
                hm(a, b) = hm(b, a) = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h * h);
            }
        }
    }
    return hm;
}

BubbleDecay bubble_decay(Dimension n, int tau, double rho_min, double rho_max, int shells, int directions) {
    if (tau < 0 || tau > 2) throw std::invalid_argument("tau must be 0, 1 or 2");
    if (!(rho_min > 0.0 && rho_max > rho_min) || shells < 3 || directions < 2) {
        throw std::invalid_argument("invalid decay sampling request");
    }
    const int m = n.tangential();
    BubbleDecay out;
    out.expected = 2.0 - tau - n.value();
    std::vector<double> lx, ly;
    for (int s = 0; s < shells; ++s) {
        const double rho = rho_min * std::pow(rho_max / rho_min, static_cast<double>(s) / (shells - 1));
        double sup = 0.0;
        // Meridian sweep from the boundary (angle 0) to the normal axis; U only
        // depends on |z| and t, so one tangential direction covers the sphere.
        for (int d = 0; d < directions; ++d) {
            const double th = 0.5 * std::numbers::pi * d / (directions - 1);
            std::vector<double> z(static_cast<std::size_t>(m), 0.0);
            z[0] = rho * std::cos(th);
            const HalfSpacePoint y(std::move(z), rho * std::sin(th));
            double v = 0.0;
            if (tau == 0) v = std::abs(eval_bubble(y, n));
            if (tau == 1) v = bubble_gradient(y, n).norm();
            if (tau == 2) v = bubble_hessian(y, n).norm();
            sup = std::max(sup, v);
        }
        out.radii.push_back(rho);
        out.sups.push_back(sup);
        lx.push_back(std::log(rho));
        ly.push_back(std::log(sup));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    out.exponent = sxy / sxx;
    return out;
}

}  // namespace yamabe
