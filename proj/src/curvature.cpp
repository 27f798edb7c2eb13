#include "yamabe/curvature.hpp"

#include <cmath>
#include <limits>
#include <complex>
#include <cstring>
#include <random>
#include <stdexcept>

namespace yamabe {

TangentTensor::TangentTensor(int dim, int rank) : dim_(dim), rank_(rank) {
    if (dim < 1 || rank < 1) throw std::invalid_argument("tensor needs positive dim and rank");
    std::size_t sz = 1;
    for (int r = 0; r < rank; ++r) sz *= static_cast<std::size_t>(dim);
    data_.assign(sz, 0.0);
}

double TangentTensor::norm_sq() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

TangentTensor& TangentTensor::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

namespace {

// Applies fn to every tensor slot, in a fixed order.
template <class Cd, class Fn>
void for_each_tensor(Cd& c, Fn&& fn) {
    fn(c.rbar);
    fn(c.rnn);
    fn(c.rbar_d1);
    fn(c.rbar_d2);
    fn(c.rnn_dk);
    fn(c.rnn_dn);
    fn(c.rnn_dkl);
    fn(c.rnn_dnk);
    fn(c.rnn_dnn);
}

template <class Cd1, class Cd2, class Fn>
void for_each_tensor_pair(Cd1& a, Cd2& b, Fn&& fn) {
    fn(a.rbar, b.rbar);
    fn(a.rnn, b.rnn);
    fn(a.rbar_d1, b.rbar_d1);
    fn(a.rbar_d2, b.rbar_d2);
    fn(a.rnn_dk, b.rnn_dk);
    fn(a.rnn_dn, b.rnn_dn);
    fn(a.rnn_dkl, b.rnn_dkl);
    fn(a.rnn_dnk, b.rnn_dnk);
    fn(a.rnn_dnn, b.rnn_dnn);
}

void require_shape(const TangentTensor& t, int m, int rank, const char* name) {
    if (t.empty()) return;
    if (t.dim() != m || t.rank() != rank) {
        throw std::invalid_argument(std::string("tensor ") + name + " has wrong shape");
    }
}

void check_shapes(const CurvatureData& c) {
    const int m = c.m();
    if (c.rbar.empty() || c.rnn.empty()) throw std::invalid_argument("rbar and rnn are required");
    require_shape(c.rbar, m, 4, "rbar");
    require_shape(c.rnn, m, 2, "rnn");
    require_shape(c.rbar_d1, m, 5, "rbar_d1");
    require_shape(c.rbar_d2, m, 6, "rbar_d2");
    require_shape(c.rnn_dk, m, 3, "rnn_dk");
    require_shape(c.rnn_dn, m, 2, "rnn_dn");
    require_shape(c.rnn_dkl, m, 4, "rnn_dkl");
    require_shape(c.rnn_dnk, m, 3, "rnn_dnk");
    require_shape(c.rnn_dnn, m, 2, "rnn_dnn");
}

// Multiplies mode `mode` of a rank-k tensor by the matrix q: out[..a..] = sum_b q(a,b) in[..b..].
TangentTensor apply_mode(const TangentTensor& in, const Eigen::MatrixXd& q, int mode) {
    const int m = in.dim();
    const int rank = in.rank();
    std::size_t stride = 1;
    for (int r = rank - 1; r > mode; --r) stride *= static_cast<std::size_t>(m);
    const std::size_t block = stride * static_cast<std::size_t>(m);
    TangentTensor out(m, rank);
    for (std::size_t base = 0; base < in.size(); base += block) {
        for (std::size_t s = 0; s < stride; ++s) {
            for (int a = 0; a < m; ++a) {
                double acc = 0.0;
                for (int b = 0; b < m; ++b) acc += q(a, b) * in[base + static_cast<std::size_t>(b) * stride + s];
                out[base + static_cast<std::size_t>(a) * stride + s] = acc;
            }
        }
    }
    return out;
}

TangentTensor rotate_all_modes(const TangentTensor& t, const Eigen::MatrixXd& q) {
    if (t.empty()) return t;
    TangentTensor out = t;
    for (int mode = 0; mode < t.rank(); ++mode) out = apply_mode(out, q, mode);
    return out;
}

void normalize_to(TangentTensor& t, double scale) {
    const double nrm = std::sqrt(t.norm_sq());
    if (nrm == 0.0) throw std::runtime_error("degenerate random tensor");
    t *= scale / nrm;
}

// Projects a rank-4 array onto algebraic curvature tensors: antisymmetry in
// both pairs, pair symmetry, first Bianchi identity.
TangentTensor riemann_project(const TangentTensor& x) {
    const int m = x.dim();
    TangentTensor a(m, 4), s(m, 4), b(m, 4);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j)
                for (int l = 0; l < m; ++l)
                    a.at(i, k, j, l) = 0.25 * (x(i, k, j, l) - x(k, i, j, l) - x(i, k, l, j) + x(k, i, l, j));
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j)
                for (int l = 0; l < m; ++l) s.at(i, k, j, l) = 0.5 * (a(i, k, j, l) + a(j, l, i, k));
    // The cyclic sum of a pair-symmetric tensor with both antisymmetries is
    // totally antisymmetric, so removing a third of it keeps the other symmetries.
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j)
                for (int l = 0; l < m; ++l)
                    b.at(i, k, j, l) =
                        s(i, k, j, l) - (s(i, k, j, l) + s(i, j, l, k) + s(i, l, k, j)) / 3.0;
    return b;
}

// Removes the Ricci part, leaving the Weyl component.
TangentTensor weyl_project(const TangentTensor& r) {
    const int m = r.dim();
    if (m < 3) return TangentTensor(m, 4);  // no Weyl part in two dimensions
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
            for (int i = 0; i < m; ++i) ric(k, l) += r(i, k, i, l);
    const double sc = ric.trace();
    auto dl = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    TangentTensor w(m, 4);
    const double c1 = 1.0 / (m - 2);
    const double c2 = sc / ((m - 1.0) * (m - 2.0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) {
                    const double ricg = ric(a, c) * dl(b, d) - ric(a, d) * dl(b, c) +
                                        ric(b, d) * dl(a, c) - ric(b, c) * dl(a, d);
                    const double gg = dl(a, c) * dl(b, d) - dl(a, d) * dl(b, c);
                    w.at(a, b, c, d) = r(a, b, c, d) - c1 * ricg + c2 * gg;
                }
    return w;
}

void gaussian_fill(TangentTensor& t, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : t.data()) v = g(rng);
}

TangentTensor random_traceless_symmetric(int m, std::mt19937_64& rng) {
    TangentTensor x(m, 2);
    gaussian_fill(x, rng);
    TangentTensor s(m, 2);
    double tr = 0.0;
    for (int i = 0; i < m; ++i) tr += x(i, i);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            s.at(i, j) = 0.5 * (x(i, j) + x(j, i)) - (i == j ? tr / m : 0.0);
    return s;
}

TangentTensor random_symmetric(int m, std::mt19937_64& rng) {
    TangentTensor x(m, 2);
    gaussian_fill(x, rng);
    TangentTensor s(m, 2);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s.at(i, j) = 0.5 * (x(i, j) + x(j, i));
    return s;
}

}  // namespace

CurvatureData CurvatureData::zero(Dimension n) {
    CurvatureData c;
    c.n = n.value();
    c.rbar = TangentTensor(n.tangential(), 4);
    c.rnn = TangentTensor(n.tangential(), 2);
    return c;
}

bool CurvatureData::has_derivatives() const noexcept {
    return !(rbar_d1.empty() && rbar_d2.empty() && rnn_dk.empty() && rnn_dn.empty() &&
             rnn_dkl.empty() && rnn_dnk.empty() && rnn_dnn.empty());
}

CurvatureData CurvatureData::scaled(double s) const {
    CurvatureData c = *this;
    for_each_tensor(c, [s](TangentTensor& t) { t *= s; });
    c.scale = scale * std::abs(s);
    c.source = "derived";
    return c;
}

CurvatureData CurvatureData::combined(double a, const CurvatureData& other, double b) const {
    if (other.n != n) throw std::invalid_argument("combining curvature data of different dimension");
    CurvatureData c = *this;
    for_each_tensor_pair(c, other, [a, b, m = m()](TangentTensor& x, const TangentTensor& y) {
        if (x.empty() && y.empty()) return;
        if (x.empty()) x = TangentTensor(m, y.rank());
        if (y.empty()) {
            x *= a;
            return;
        }
        if (x.size() != y.size()) throw std::invalid_argument("tensor shape mismatch");
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = a * x[k] + b * y[k];
    });
    c.source = "derived";
    return c;
}

CurvatureData CurvatureData::rotated(const Eigen::MatrixXd& q) const {
    if (q.rows() != m() || q.cols() != m()) throw std::invalid_argument("rotation has wrong size");
    CurvatureData c = *this;
    for_each_tensor(c, [&q](TangentTensor& t) { t = rotate_all_modes(t, q); });
    c.source = "derived";
    return c;
}

std::string CurvatureData::canonical_bytes() const {
    std::string out = "curv/1;n=" + std::to_string(n) + ";";
    auto append = [&out](const TangentTensor& t) {
        const std::int32_t hdr[2] = {t.rank(), static_cast<std::int32_t>(t.size())};
        out.append(reinterpret_cast<const char*>(hdr), sizeof(hdr));
        if (!t.empty()) {
            out.append(reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(double));
        }
    };
    for_each_tensor(*this, append);
    return out;
}

bool ValidationReport::pass() const noexcept {
    for (const auto& c : checks) {
        if (!(c.max_deviation < tolerance)) return false;
    }
    return true;
}

std::vector<ValidationIssue> ValidationReport::violations() const {
    std::vector<ValidationIssue> v;
    for (const auto& c : checks) {
        if (!(c.max_deviation < tolerance)) v.push_back(c);
    }
    return v;
}

ValidationReport validate(const CurvatureData& curv, double tolerance) {
    Dimension dim(curv.n);
    check_shapes(curv);
    const int m = dim.tangential();
    const TangentTensor& r = curv.rbar;
    double anti_ik = 0, anti_jl = 0, pair = 0, bianchi = 0, ricci = 0, rsym = 0;
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j)
                for (int l = 0; l < m; ++l) {
                    const double v = r(i, k, j, l);
                    anti_ik = std::max(anti_ik, std::abs(v + r(k, i, j, l)));
                    anti_jl = std::max(anti_jl, std::abs(v + r(i, k, l, j)));
                    pair = std::max(pair, std::abs(v - r(j, l, i, k)));
                    bianchi = std::max(bianchi, std::abs(v + r(i, j, l, k) + r(i, l, k, j)));
                }
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += r(i, k, i, l);
            ricci = std::max(ricci, std::abs(s));
            rsym = std::max(rsym, std::abs(curv.rnn(k, l) - curv.rnn(l, k)));
        }
    double tr = 0.0;
    for (int i = 0; i < m; ++i) tr += curv.rnn(i, i);

    ValidationReport rep;
    rep.tolerance = tolerance;
    rep.checks = {{"rbar_antisymmetry_ik", anti_ik}, {"rbar_antisymmetry_jl", anti_jl},
                  {"rbar_pair_symmetry", pair},      {"rbar_first_bianchi", bianchi},
                  {"rbar_ricci_trace", ricci},       {"rnn_symmetry", rsym},
                  {"rnn_trace", std::abs(tr)}};
    return rep;
}

CurvatureData random_admissible(std::uint64_t seed, double scale, Dimension n) {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    const int m = n.tangential();
    std::mt19937_64 rng(seed);
    CurvatureData c = CurvatureData::zero(n);
    TangentTensor x(m, 4);
    gaussian_fill(x, rng);
    c.rbar = weyl_project(riemann_project(x));
    c.rnn = random_traceless_symmetric(m, rng);
    if (m >= 3) normalize_to(c.rbar, scale);
    if (m >= 2) normalize_to(c.rnn, scale);
    c.seed = seed;
    c.scale = scale;
    c.source = "random";
    return c;
}

CurvatureData with_random_derivatives(const CurvatureData& curv, std::uint64_t seed, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    const int m = curv.m();
    // Separate stream from the one that produced the base tensors.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    CurvatureData c = curv;

    // Each slice Rbar_{....,p} carries the algebraic curvature symmetries.
    c.rbar_d1 = TangentTensor(m, 5);
    for (int p = 0; p < m; ++p) {
        TangentTensor x(m, 4);
        gaussian_fill(x, rng);
        const TangentTensor slice = riemann_project(x);
        for (std::size_t k = 0; k < slice.size(); ++k) {
            c.rbar_d1[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(p)] = slice[k];
        }
    }
    normalize_to(c.rbar_d1, scale);

    c.rnn_dk = TangentTensor(m, 3);
    for (int p = 0; p < m; ++p) {
        const TangentTensor s = random_symmetric(m, rng);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) c.rnn_dk.at(i, j, p) = s(i, j);
    }
    normalize_to(c.rnn_dk, scale);

    c.rnn_dn = random_symmetric(m, rng);
    normalize_to(c.rnn_dn, scale);
    return c;
}

double weyl_norm_sq(const CurvatureData& curv) { return curv.rbar.norm_sq(); }

double rnn_norm_sq(const CurvatureData& curv) { return curv.rnn.norm_sq(); }

namespace {

// Homogeneous pieces of g^{ij} - delta_ij (tangential block, m x m, row-major)
// at tangential point z and normal coordinate t. Scalar is double or complex
// so that divergences can be taken by complex-step differentiation.
template <class S>
void metric_pieces(const CurvatureData& c, const S* z, S t, std::vector<S>& g2, std::vector<S>& g3,
                   std::vector<S>& g4) {
    const int m = c.m();
    const std::size_t mm = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    g2.assign(mm, S(0));
    g3.assign(mm, S(0));
    g4.assign(mm, S(0));
    const S t2 = t * t;

    // A_ij = Rbar_ikjl z_k z_l
    std::vector<S> a(mm, S(0));
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < m; ++j) {
                S acc(0);
                for (int l = 0; l < m; ++l) acc += c.rbar(i, k, j, l) * z[l];
                a[static_cast<std::size_t>(i * m + j)] += acc * z[k];
            }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i * m + j);
            g2[ij] = a[ij] / 3.0 + c.rnn(i, j) * t2;
        }

    // cubic
    if (!c.rbar_d1.empty()) {
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k)
                for (int j = 0; j < m; ++j)
                    for (int l = 0; l < m; ++l) {
                        S acc(0);
                        const std::size_t base = c.rbar_d1.index(i, k, j, l) * static_cast<std::size_t>(m);
                        for (int p = 0; p < m; ++p) acc += c.rbar_d1[base + static_cast<std::size_t>(p)] * z[p];
                        g3[static_cast<std::size_t>(i * m + j)] += acc * z[k] * z[l] / 6.0;
                    }
    }
    if (!c.rnn_dk.empty()) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                S acc(0);
                for (int k = 0; k < m; ++k) acc += c.rnn_dk(i, j, k) * z[k];
                g3[static_cast<std::size_t>(i * m + j)] += acc * t2;
            }
    }
    if (!c.rnn_dn.empty()) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) g3[static_cast<std::size_t>(i * m + j)] += c.rnn_dn(i, j) * t2 * t / 3.0;
    }

    // quartic
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            S aa(0), ar(0), ra(0), rr(0);
            for (int s = 0; s < m; ++s) {
                aa += a[static_cast<std::size_t>(i * m + s)] * a[static_cast<std::size_t>(j * m + s)];
                ar += a[static_cast<std::size_t>(i * m + s)] * c.rnn(s, j);
                ra += a[static_cast<std::size_t>(j * m + s)] * c.rnn(s, i);
                rr += c.rnn(i, s) * c.rnn(s, j);
            }
            g4[static_cast<std::size_t>(i * m + j)] =
                aa / 15.0 + (ar + ra) / 6.0 * t2 + rr * (8.0 / 12.0) * t2 * t2;
        }
    if (!c.rbar_d2.empty()) {
        const std::size_t m_ = static_cast<std::size_t>(m);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k)
                for (int j = 0; j < m; ++j)
                    for (int l = 0; l < m; ++l) {
                        const std::size_t base = c.rbar.index(i, k, j, l) * m_ * m_;
                        S acc(0);
                        for (int p = 0; p < m; ++p)
                            for (int q = 0; q < m; ++q)
                                acc += c.rbar_d2[base + static_cast<std::size_t>(p) * m_ + static_cast<std::size_t>(q)] *
                                       z[p] * z[q];
                        g4[static_cast<std::size_t>(i * m + j)] += acc * z[k] * z[l] / 20.0;
                    }
    }
    if (!c.rnn_dkl.empty()) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                S acc(0);
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l) acc += c.rnn_dkl(i, j, k, l) * z[k] * z[l];
                g4[static_cast<std::size_t>(i * m + j)] += acc * t2 / 2.0;
            }
    }
    if (!c.rnn_dnk.empty()) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                S acc(0);
                for (int k = 0; k < m; ++k) acc += c.rnn_dnk(i, j, k) * z[k];
                g4[static_cast<std::size_t>(i * m + j)] += acc * t2 * t / 3.0;
            }
    }
    if (!c.rnn_dnn.empty()) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) g4[static_cast<std::size_t>(i * m + j)] += c.rnn_dnn(i, j) * t2 * t2 / 12.0;
    }
}

}  // namespace

SmallMat metric_inverse(const CurvatureData& curv, const HalfSpacePoint& y) {
    Dimension dim(curv.n);
    check_shapes(curv);
    check_point(y, dim);
    const int nn = dim.value();
    const int m = dim.tangential();
    std::vector<double> g2, g3, g4;
    metric_pieces<double>(curv, y.z.data(), y.t, g2, g3, g4);
    SmallMat g = SmallMat::Identity(nn, nn);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i * m + j);
            g(i, j) += g2[ij] + g3[ij] + g4[ij];
        }
    return g;
}

MetricTerms metric_terms(const CurvatureData& curv, const HalfSpacePoint& w) {
    Dimension dim(curv.n);
    check_shapes(curv);
    if (static_cast<int>(w.z.size()) != dim.tangential()) throw std::invalid_argument("point size");
    const int m = dim.tangential();
    MetricTerms mt;
    mt.g2 = SmallMat::Zero(m, m);
    mt.g3 = SmallMat::Zero(m, m);
    mt.g4 = SmallMat::Zero(m, m);
    mt.d2 = SmallVec::Zero(m);
    mt.d3 = SmallVec::Zero(m);
    mt.d4 = SmallVec::Zero(m);

    std::vector<double> g2, g3, g4;
    metric_pieces<double>(curv, w.z.data(), w.t, g2, g3, g4);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i * m + j);
            mt.g2(i, j) = g2[ij];
            mt.g3(i, j) = g3[ij];
            mt.g4(i, j) = g4[ij];
        }

    // The tangential block has no normal row, so d_j = sum_{i<n} d_i g^{ij};
    // each partial derivative is exact to rounding via a complex step.
    using C = std::complex<double>;
    constexpr double h = 1e-30;
    std::vector<C> zc(w.z.begin(), w.z.end());
    std::vector<C> c2, c3, c4;
    for (int i = 0; i < m; ++i) {
        zc[static_cast<std::size_t>(i)] += C(0.0, h);
        metric_pieces<C>(curv, zc.data(), C(w.t, 0.0), c2, c3, c4);
        for (int j = 0; j < m; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i * m + j);
            mt.d2[j] += c2[ij].imag() / h;
            mt.d3[j] += c3[ij].imag() / h;
            mt.d4[j] += c4[ij].imag() / h;
        }
        zc[static_cast<std::size_t>(i)] = C(w.z[static_cast<std::size_t>(i)], 0.0);
    }
    return mt;
}

double metric_det(const HalfSpacePoint&) { return 1.0; }

double metric_spd_radius(const CurvatureData& curv) {
    check_shapes(curv);
    auto nrm = [](const TangentTensor& t) { return t.empty() ? 0.0 : std::sqrt(t.norm_sq()); };
    // On |w| = 1 every z and t factor is at most one and |A|_F <= |rbar|_F.
    const double r = nrm(curv.rbar), q = nrm(curv.rnn);
    const double b2 = r / 3.0 + q;
    const double b3 = nrm(curv.rbar_d1) / 6.0 + nrm(curv.rnn_dk) + nrm(curv.rnn_dn) / 3.0;
    const double b4 = r * r / 15.0 + r * q / 3.0 + q * q * (8.0 / 12.0) + nrm(curv.rbar_d2) / 20.0 +
                      nrm(curv.rnn_dkl) / 2.0 + nrm(curv.rnn_dnk) / 3.0 + nrm(curv.rnn_dnn) / 12.0;
    if (b2 == 0.0 && b3 == 0.0 && b4 == 0.0) return std::numeric_limits<double>::infinity();
    auto bound = [&](double x) { return x * x * (b2 + x * (b3 + x * b4)); };
    double lo = 0.0, hi = 1.0;
    while (bound(hi) < 0.5) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bound(mid) < 0.5 ? lo : hi) = mid;
    }
    return lo;
}

double MeanCurvatureModel::at_radius(double rho) const { return c_h * std::pow(rho, exponent); }

double MeanCurvatureModel::operator()(const HalfSpacePoint& y) const { return at_radius(y.norm()); }

double mean_curvature_model(const HalfSpacePoint& y, const MeanCurvatureModel& model) { return model(y); }

double rhs_corrector(const CurvatureData& curv, const HalfSpacePoint& y) {
    Dimension dim(curv.n);
    check_shapes(curv);
    const int m = dim.tangential();
    const SmallMat h = bubble_hessian(y, dim);
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double a = 0.0;
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l)
                    a += curv.rbar(i, k, j, l) * y.z[static_cast<std::size_t>(k)] * y.z[static_cast<std::size_t>(l)];
            acc += (a / 3.0 + curv.rnn(i, j) * y.t * y.t) * h(i, j);
        }
    return acc;
}

std::string to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::NormalCurvature:
            return "normal_curvature";
    }
    return "unknown";
}

double profile_forcing(ProfileKind kind, Dimension n, double r, double t) {
    switch (kind) {
        case ProfileKind::NormalCurvature: {
            const int nn = n.value();
            const double a = 1.0 + t;
            const double d = a * a + r * r;
            return nn * (nn - 2) * t * t * std::pow(d, -0.5 * (nn + 2));
        }
    }
    throw std::invalid_argument("unknown profile kind");
}

double SectorDecomposition::evaluate(const HalfSpacePoint& y) const {
    Dimension dim(n);
    check_point(y, dim);
    const double r = std::sqrt(y.z_norm_sq());
    double acc = 0.0;
    for (const auto& s : sectors) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < s.tensor.rows(); ++i)
            for (Eigen::Index j = 0; j < s.tensor.cols(); ++j)
                q += s.tensor(i, j) * y.z[static_cast<std::size_t>(i)] * y.z[static_cast<std::size_t>(j)];
        acc += q * profile_forcing(s.profile, dim, r, y.t);
    }
    return acc;
}

SectorDecomposition sector_decompose(const CurvatureData& curv) {
    Dimension dim(curv.n);
    check_shapes(curv);
    const int m = dim.tangential();
    if (!validate(curv, 1e-10).pass()) {
        throw std::invalid_argument("sector decomposition needs admissible curvature data");
    }
    SectorDecomposition dec;
    dec.n = curv.n;
    if (curv.rnn.norm_sq() == 0.0) return dec;
    Eigen::MatrixXd t(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) t(i, j) = curv.rnn(i, j);
    dec.sectors.push_back({t, ProfileKind::NormalCurvature});
    return dec;
}

}  // namespace yamabe
