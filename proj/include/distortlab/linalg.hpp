#pragma once

#include <Eigen/Dense>

namespace distortlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Shared numerical tolerances; tests and library code read the same values.
struct Tolerances {
    static constexpr double orthogonality = 1e-12;
    static constexpr double antisymmetry = 1e-12;
    static constexpr double rank_cutoff = 1e-12;
};

/// Orthogonal matrix plus translation, x -> rotation * x + translation.
///
/// `proper` caches det(rotation) > 0. Construct through `make_motion` to get
/// the orthogonality check.
struct EuclideanMotion {
    Matrix rotation;
    Vector translation;
    bool proper = true;

    int dim() const { return static_cast<int>(translation.size()); }
    Vector apply(const Vector& x) const { return rotation * x + translation; }
    EuclideanMotion inverse() const;
};

EuclideanMotion make_motion(Matrix rotation, Vector translation);
EuclideanMotion identity_motion(int dim);

/// Hilbert-Schmidt (Frobenius) norm. Throws InvalidInput on non-finite entries.
double hs_norm(const Matrix& m);

/// Singular value decomposition of a square matrix.
struct Svd {
    Matrix u;
    Vector singular_values;  // descending
    Matrix v;
};

Svd svd(const Matrix& m);

enum class OrthogonalClass { Any, Proper };

/// Nearest orthogonal matrix U*V^T without a rank check. With Proper the
/// column of V for the smallest singular value is negated when det < 0.
/// Rank-deficient input returns one of the (non-unique) minimizers.
Matrix nearest_orthogonal(const Matrix& m, OrthogonalClass cls = OrthogonalClass::Any);

/// Orthogonal polar factor of a full-rank square matrix; the minimizer of
/// hs_norm(m - q) over orthogonal q. Throws DegenerateInput carrying the
/// smallest singular value when it is below Tolerances::rank_cutoff.
Matrix polar_orthogonal_factor(const Matrix& m);

/// (m - m^T) / 2.
Matrix antisymmetric_part(const Matrix& m);
/// (m + m^T) / 2.
Matrix symmetric_part(const Matrix& m);

/// Matrix exponential of an antisymmetric matrix by scaling and squaring with
/// a Taylor core. The result is in SO(D).
Matrix exp_antisymmetric(const Matrix& s);

/// Least-squares rigid fit dst_i ~ T * src_i + x0 over point columns.
struct ProcrustesFit {
    EuclideanMotion motion;
    Vector covariance_singular_values;  // of sum (dst_i - dst_mean)(src_i - src_mean)^T
};

ProcrustesFit procrustes_motion(const Matrix& src, const Matrix& dst, OrthogonalClass cls);

/// max |q^T q - I| entrywise.
double orthogonality_defect(const Matrix& q);

/// Random element of SO(D) (QR of a Gaussian matrix, sign-fixed) from a seed.
Matrix random_rotation(int dim, unsigned long long seed);

void require_finite(const Matrix& m, const char* what);

}  // namespace distortlab
