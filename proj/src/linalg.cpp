#include "distortlab/linalg.hpp"

#include <cmath>
#include <sstream>

#include "distortlab/error.hpp"
#include "distortlab/random.hpp"

namespace distortlab {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw InvalidInput(std::string(what) + ": non-finite entry");
    }
}

EuclideanMotion make_motion(Matrix rotation, Vector translation) {
    if (rotation.rows() != rotation.cols() || rotation.rows() != translation.size()) {
        throw InvalidInput("make_motion: dimension mismatch");
    }
    require_finite(rotation, "make_motion");
    require_finite(translation, "make_motion");
    const double defect = orthogonality_defect(rotation);
    if (defect > 1e3 * Tolerances::orthogonality) {
        std::ostringstream msg;
        msg << "make_motion: rotation is not orthogonal (defect " << defect << ")";
        throw InvalidInput(msg.str());
    }
    const bool proper = rotation.determinant() > 0;
    return EuclideanMotion{std::move(rotation), std::move(translation), proper};
}

EuclideanMotion identity_motion(int dim) {
    return EuclideanMotion{Matrix::Identity(dim, dim), Vector::Zero(dim), true};
}

EuclideanMotion EuclideanMotion::inverse() const {
    Matrix rt = rotation.transpose();
    Vector t = -(rt * translation);
    return EuclideanMotion{std::move(rt), std::move(t), proper};
}

double hs_norm(const Matrix& m) {
    require_finite(m, "hs_norm");
    return m.norm();
}

Svd svd(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return Svd{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

Matrix nearest_orthogonal(const Matrix& m, OrthogonalClass cls) {
    if (m.rows() != m.cols()) throw InvalidInput("nearest_orthogonal: matrix not square");
    require_finite(m, "nearest_orthogonal");
    Svd d = svd(m);
    Matrix q = d.u * d.v.transpose();
    if (cls == OrthogonalClass::Proper && q.determinant() < 0) {
        // Kabsch correction: give up the direction that costs least.
        d.v.col(d.v.cols() - 1) *= -1.0;
        q = d.u * d.v.transpose();
    }
    return q;
}

Matrix polar_orthogonal_factor(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidInput("polar_orthogonal_factor: matrix not square");
    require_finite(m, "polar_orthogonal_factor");
    const Svd d = svd(m);
    const double smallest = d.singular_values(d.singular_values.size() - 1);
    if (!(smallest > Tolerances::rank_cutoff)) {
        std::ostringstream msg;
        msg << "polar_orthogonal_factor: rank-deficient input (smallest singular value "
            << smallest << ")";
        throw DegenerateInput(msg.str(), smallest);
    }
    return d.u * d.v.transpose();
}

Matrix antisymmetric_part(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidInput("antisymmetric_part: matrix not square");
    require_finite(m, "antisymmetric_part");
    return 0.5 * (m - m.transpose());
}

Matrix symmetric_part(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidInput("symmetric_part: matrix not square");
    require_finite(m, "symmetric_part");
    return 0.5 * (m + m.transpose());
}

Matrix exp_antisymmetric(const Matrix& s) {
    if (s.rows() != s.cols()) throw InvalidInput("exp_antisymmetric: matrix not square");
    require_finite(s, "exp_antisymmetric");
    const double asym = (s + s.transpose()).cwiseAbs().maxCoeff();
    if (asym > Tolerances::antisymmetry * std::max(1.0, s.cwiseAbs().maxCoeff())) {
        throw InvalidInput("exp_antisymmetric: input is not antisymmetric");
    }

    const auto n = s.rows();
    const double norm = s.norm();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Matrix a = s / std::ldexp(1.0, squarings);

    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 30; ++k) {
        term = term * a / static_cast<double>(k);
        result += term;
        if (term.norm() < 1e-18) break;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

double orthogonality_defect(const Matrix& q) {
    const auto n = q.cols();
    return (q.transpose() * q - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

Matrix random_rotation(int dim, unsigned long long seed) {
    Rng rng(derive_seed(seed, 0));
    std::normal_distribution<double> normal;
    Matrix g(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

}  // namespace distortlab

namespace distortlab {

ProcrustesFit procrustes_motion(const Matrix& src, const Matrix& dst, OrthogonalClass cls) {
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
        throw InvalidInput("procrustes_motion: point sets differ in shape");
    }
    if (src.cols() < 1) throw InvalidInput("procrustes_motion: empty point set");
    require_finite(src, "procrustes_motion");
    require_finite(dst, "procrustes_motion");
    const Vector src_mean = src.rowwise().mean();
    const Vector dst_mean = dst.rowwise().mean();
    const Matrix cov = (dst.colwise() - dst_mean) * (src.colwise() - src_mean).transpose();
    const Svd d = svd(cov);
    Matrix v = d.v;
    Matrix t = d.u * v.transpose();
    if (cls == OrthogonalClass::Proper && t.determinant() < 0) {
        v.col(v.cols() - 1) *= -1.0;
        t = d.u * v.transpose();
    }
    Vector x0 = dst_mean - t * src_mean;
    const bool proper = t.determinant() > 0;
    return ProcrustesFit{EuclideanMotion{std::move(t), std::move(x0), proper}, d.singular_values};
}

}  // namespace distortlab
