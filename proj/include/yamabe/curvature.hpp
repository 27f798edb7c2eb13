#pragma once

// Curvature data at the blow-up point, the Fermi-coordinate expansion of the
// inverse metric, and the forcing term of the corrector problem.

#include <cstdint>
#include <string>
#include <vector>

#include "yamabe/bubble.hpp"

namespace yamabe {

/// Dense tensor over the m = n-1 tangential indices, row-major.
class TangentTensor {
public:
    TangentTensor() = default;
    TangentTensor(int dim, int rank);

    int dim() const noexcept { return dim_; }
    int rank() const noexcept { return rank_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator[](std::size_t k) { return data_[k]; }
    double operator[](std::size_t k) const { return data_[k]; }
    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * dim_ + j); }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>((i * dim_ + j) * dim_ + k);
    }
    std::size_t index(int i, int j, int k, int l) const {
        return static_cast<std::size_t>(((i * dim_ + j) * dim_ + k) * dim_ + l);
    }

    double operator()(int i, int j) const { return data_[index(i, j)]; }
    double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
    double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
    double& at(int i, int j) { return data_[index(i, j)]; }
    double& at(int i, int j, int k) { return data_[index(i, j, k)]; }
    double& at(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }

    double norm_sq() const noexcept;
    TangentTensor& operator*=(double s);

private:
    int dim_ = 0;
    int rank_ = 0;
    std::vector<double> data_;
};

/// Curvature of the conformal Fermi metric at the boundary point.
///
/// rbar is the boundary curvature tensor with index order (i,k,j,l), rnn the
/// matrix R_{ninj}. The derivative tensors are optional; an empty tensor means
/// zero. Their index order follows the comma notation, e.g. rbar_d1 holds
/// Rbar_{ikjl,m} with m last.
struct CurvatureData {
    int n = 0;
    TangentTensor rbar;      // rank 4
    TangentTensor rnn;       // rank 2
    TangentTensor rbar_d1;   // Rbar_{ikjl,m}
    TangentTensor rbar_d2;   // Rbar_{ikjl,mp}
    TangentTensor rnn_dk;    // R_{ninj,k}
    TangentTensor rnn_dn;    // R_{ninj,n}
    TangentTensor rnn_dkl;   // R_{ninj,kl}
    TangentTensor rnn_dnk;   // R_{ninj,nk}
    TangentTensor rnn_dnn;   // R_{ninj,nn}

    // provenance
    std::uint64_t seed = 0;
    double scale = 0.0;
    std::string source = "manual";

    static CurvatureData zero(Dimension n);

    Dimension dim() const { return Dimension(n); }
    int m() const noexcept { return n - 1; }
    bool has_derivatives() const noexcept;

    /// Multiplies every tensor (including derivative data) by s.
    CurvatureData scaled(double s) const;
    /// a*this + b*other, tensor by tensor.
    CurvatureData combined(double a, const CurvatureData& other, double b) const;
    /// Applies an orthogonal change of tangential frame to every tensor.
    CurvatureData rotated(const Eigen::MatrixXd& q) const;

    /// Canonical byte serialization, the input of content hashes.
    std::string canonical_bytes() const;
};

struct ValidationIssue {
    std::string check;
    double max_deviation = 0.0;
};

struct ValidationReport {
    std::vector<ValidationIssue> checks;  ///< every check, with its deviation
    double tolerance = 1e-12;
    bool pass() const noexcept;
    std::vector<ValidationIssue> violations() const;
};

ValidationReport validate(const CurvatureData& curv, double tolerance = 1e-12);

/// Deterministic admissible curvature: Riemann symmetries, vanishing Ricci
/// traces, traceless symmetric rnn. rbar and rnn are normalized to Frobenius
/// norm `scale`.
CurvatureData random_admissible(std::uint64_t seed, double scale, Dimension n);

/// Adds random cubic-order expansion data (Rbar_{ikjl,m}, R_{ninj,k},
/// R_{ninj,n}), each normalized to Frobenius norm `scale`.
CurvatureData with_random_derivatives(const CurvatureData& curv, std::uint64_t seed, double scale);

/// |Wbar|^2. Ricci traces of rbar vanish, so the Weyl part of rbar is rbar
/// itself and the squared norm is taken over all entries.
double weyl_norm_sq(const CurvatureData& curv);
double rnn_norm_sq(const CurvatureData& curv);

/// Inverse metric g^{ij}(y), n x n, through fourth order in |y|. The normal
/// row and column are those of the identity.
SmallMat metric_inverse(const CurvatureData& curv, const HalfSpacePoint& y);

/// Radius below which metric_inverse is guaranteed symmetric positive
/// definite: with Frobenius bounds b_k on the homogeneous pieces over the unit
/// sphere, it solves b2 r^2 + b3 r^3 + b4 r^4 = 1/2. Infinite for flat data.
double metric_spd_radius(const CurvatureData& curv);

/// Homogeneous pieces of g^{ij} - delta_ij on the tangential block, evaluated
/// at a point w: g(s w) = I + s^2 g2 + s^3 g3 + s^4 g4, together with the
/// divergence d_j = sum_i d_i g^{ij} of each piece (homogeneous of one degree
/// less).
struct MetricTerms {
    SmallMat g2, g3, g4;
    SmallVec d2, d3, d4;
};

MetricTerms metric_terms(const CurvatureData& curv, const HalfSpacePoint& w);

/// Volume element of the conformal Fermi metric (identically one).
double metric_det(const HalfSpacePoint& y);

/// Mean curvature model h(y) = c_h |y|^exponent. The default exponent 3 keeps
/// h and its first two derivatives zero at the origin.
struct MeanCurvatureModel {
    double c_h = 1.0;
    double exponent = 3.0;
    double operator()(const HalfSpacePoint& y) const;
    double at_radius(double rho) const;
};

double mean_curvature_model(const HalfSpacePoint& y, const MeanCurvatureModel& model = {});

/// [1/3 Rbar_ikjl z_k z_l + R_ninj t^2] d_ij U.
double rhs_corrector(const CurvatureData& curv, const HalfSpacePoint& y);

/// Radial profiles that can appear as forcing of a single sector.
enum class ProfileKind {
    /// n(n-2) t^2 D^{-(n+2)/2}: what R_ninj t^2 d_ij U leaves after the trace
    /// contracts away.
    NormalCurvature,
};

std::string to_string(ProfileKind kind);
double profile_forcing(ProfileKind kind, Dimension n, double r, double t);

struct Sector {
    Eigen::MatrixXd tensor;  ///< traceless symmetric T_ij
    ProfileKind profile;
};

/// rhs = sum_s T_ij z_i z_j h_s(r,t) + h_0(r,t). For admissible data the
/// isotropic part h_0 and the rbar contribution vanish identically, so only
/// the R_ninj sector survives.
struct SectorDecomposition {
    int n = 0;
    std::vector<Sector> sectors;

    double evaluate(const HalfSpacePoint& y) const;
};

SectorDecomposition sector_decompose(const CurvatureData& curv);

}  // namespace yamabe
