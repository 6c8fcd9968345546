#include "distortlab/maps.hpp"

#include <cmath>
#include <sstream>

#include "distortlab/error.hpp"
#include "distortlab/parallel.hpp"
#include "distortlab/random.hpp"

namespace distortlab {

namespace {

std::string describe_point(const Vector& x) {
    std::ostringstream out;
    out.precision(17);
    out << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x(i);
    out << ')';
    return out.str();
}

void check_dim(const DifferentiableMap& map, const Vector& x) {
    if (x.size() != map.dim()) throw InvalidInput(map.name() + ": dimension mismatch");
}

class IdentityMap final : public DifferentiableMap {
public:
    explicit IdentityMap(int dim) : dim_(dim) {}
    int dim() const override { return dim_; }
    Vector eval(const Vector& x) const override {
        check_dim(*this, x);
        return x;
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(*this, x);
        return Matrix::Identity(dim_, dim_);
    }
    std::string name() const override { return "identity"; }

private:
    int dim_;
};

class AffineMap final : public DifferentiableMap {
public:
    AffineMap(Matrix linear, Vector offset) : linear_(std::move(linear)), offset_(std::move(offset)) {}
    int dim() const override { return static_cast<int>(offset_.size()); }
    Vector eval(const Vector& x) const override {
        check_dim(*this, x);
        return linear_ * x + offset_;
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(*this, x);
        return linear_;
    }
    std::string name() const override { return "affine"; }

private:
    Matrix linear_;
    Vector offset_;
};

class CallableMap final : public DifferentiableMap {
public:
    CallableMap(int dim, VectorFunction eval, std::optional<JacobianFunction> jac, std::string name)
        : dim_(dim), eval_(std::move(eval)), jac_(std::move(jac)), name_(std::move(name)) {}
    int dim() const override { return dim_; }
    Vector eval(const Vector& x) const override {
        check_dim(*this, x);
        return eval_(x);
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(*this, x);
        return jac_ ? (*jac_)(x) : finite_difference_jacobian(eval_, x);
    }
    std::string name() const override { return name_; }

private:
    int dim_;
    VectorFunction eval_;
    std::optional<JacobianFunction> jac_;
    std::string name_;
};

class ComposedMap final : public DifferentiableMap {
public:
    ComposedMap(MapPtr inner, EuclideanMotion pre, EuclideanMotion post)
        : inner_(std::move(inner)), pre_(std::move(pre)), post_(std::move(post)) {}
    int dim() const override { return inner_->dim(); }
    Vector eval(const Vector& x) const override {
        check_dim(*this, x);
        return post_.apply(inner_->eval(pre_.apply(x)));
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(*this, x);
        return post_.rotation * inner_->jacobian(pre_.apply(x)) * pre_.rotation;
    }
    std::string name() const override { return "composed(" + inner_->name() + ")"; }

private:
    MapPtr inner_;
    EuclideanMotion pre_;
    EuclideanMotion post_;
};

}  // namespace

Matrix finite_difference_jacobian(const VectorFunction& f, const Vector& x, std::optional<double> h) {
    const double step = h ? *h : 1e-5 * std::max(1.0, x.norm());
    const auto n = x.size();
    Matrix jac(n, n);
    Vector xp = x;
    Vector xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
        xp(j) = x(j) + step;
        xm(j) = x(j) - step;
        const Vector diff = f(xp) - f(xm);
        if (diff.size() != n) throw InvalidInput("finite_difference_jacobian: output size mismatch");
        jac.col(j) = diff / (2.0 * step);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return jac;
}

MapPtr make_identity_map(int dim) {
    if (dim < 1) throw InvalidInput("make_identity_map: dim must be >= 1");
    return std::make_shared<IdentityMap>(dim);
}

MapPtr make_affine_map(Matrix linear, Vector offset) {
    if (linear.rows() != linear.cols() || linear.rows() != offset.size()) {
        throw InvalidInput("make_affine_map: dimension mismatch");
    }
    require_finite(linear, "make_affine_map");
    require_finite(offset, "make_affine_map");
    return std::make_shared<AffineMap>(std::move(linear), std::move(offset));
}

MapPtr make_motion_map(const EuclideanMotion& motion) {
    return make_affine_map(motion.rotation, motion.translation);
}

MapPtr make_callable_map(int dim, VectorFunction eval, std::optional<JacobianFunction> jacobian,
                         std::string name) {
    if (dim < 1) throw InvalidInput("make_callable_map: dim must be >= 1");
    if (!eval) throw InvalidInput("make_callable_map: empty eval function");
    return std::make_shared<CallableMap>(dim, std::move(eval), std::move(jacobian), std::move(name));
}

AngleProfile arctan_profile(double a) {
    AngleProfile p;
    p.kind = "arctan";
    p.amplitude = a;
    p.f = [a](double t) { return a * std::atan(t); };
    p.f_prime = [a](double t) { return a / (1.0 + t * t); };
    p.c_bound = std::abs(a) / 2.0;
    return p;
}

AngleProfile log_profile(double a, double t0) {
    if (!(t0 > 0.0)) throw InvalidInput("log_profile: clamp must be positive");
    AngleProfile p;
    p.kind = "log";
    p.amplitude = a;
    p.clamp = t0;
    p.f = [a, t0](double t) { return 0.5 * a * std::log1p((t / t0) * (t / t0)); };
    p.f_prime = [a, t0](double t) { return a * t / (t * t + t0 * t0); };
    p.c_bound = std::abs(a);
    return p;
}

AngleProfile constant_profile(double theta) {
    AngleProfile p;
    p.kind = "constant";
    p.amplitude = theta;
    p.f = [theta](double) { return theta; };
    p.f_prime = [](double) { return 0.0; };
    p.c_bound = 0.0;
    return p;
}

SlowTwist::SlowTwist(std::vector<TwistBlock> blocks, Matrix theta)
    : dim_(0), blocks_(std::move(blocks)), theta_(std::move(theta)) {
    for (const TwistBlock& b : blocks_) {
        if (b.kind == TwistBlock::Kind::Rotation2 && (!b.profile.f || !b.profile.f_prime)) {
            throw InvalidInput("SlowTwist: rotation block without a profile");
        }
        dim_ += b.size();
    }
    if (dim_ < 1) throw InvalidInput("SlowTwist: no blocks");
    if (theta_.rows() != dim_ || theta_.cols() != dim_) {
        throw InvalidInput("SlowTwist: frame size does not match block layout");
    }
    require_finite(theta_, "SlowTwist");
    if (orthogonality_defect(theta_) > 1e3 * Tolerances::orthogonality || theta_.determinant() < 0) {
        throw InvalidInput("SlowTwist: frame must be in SO(D)");
    }
}

double SlowTwist::c_bound() const {
    double c = 0.0;
    for (const TwistBlock& b : blocks_)
        if (b.kind == TwistBlock::Kind::Rotation2) c = std::max(c, b.profile.c_bound);
    return c;
}

Vector SlowTwist::eval(const Vector& x) const {
    check_dim(*this, x);
    const double r = x.norm();
    Vector y = theta_ * x;
    Eigen::Index p = 0;
    for (const TwistBlock& b : blocks_) {
        if (b.kind == TwistBlock::Kind::Rotation2) {
            const double angle = b.profile.f(r);
            const double c = std::cos(angle);
            const double s = std::sin(angle);
            const double y0 = y(p);
            const double y1 = y(p + 1);
            y(p) = c * y0 + s * y1;
            y(p + 1) = -s * y0 + c * y1;
        }
        p += b.size();
    }
    return theta_.transpose() * y;
}

Matrix SlowTwist::jacobian(const Vector& x) const {
    check_dim(*this, x);
    const double r = x.norm();
    const Vector y = theta_ * x;
    // inner = S_x * Theta + (dS/dr * y) * (x / r)^T
    Matrix s = Matrix::Identity(dim_, dim_);
    Vector radial = Vector::Zero(dim_);
    Eigen::Index p = 0;
    for (const TwistBlock& b : blocks_) {
        if (b.kind == TwistBlock::Kind::Rotation2) {
            const double angle = b.profile.f(r);
            const double c = std::cos(angle);
            const double sn = std::sin(angle);
            s(p, p) = c;
            s(p, p + 1) = sn;
            s(p + 1, p) = -sn;
            s(p + 1, p + 1) = c;
            if (r > 0.0) {
                const double fp = b.profile.f_prime(r);
                radial(p) = fp * (-sn * y(p) + c * y(p + 1));
                radial(p + 1) = fp * (-c * y(p) - sn * y(p + 1));
            }
        }
        p += b.size();
    }
    Matrix inner = s * theta_;
    if (r > 0.0) inner += radial * (x / r).transpose();
    return theta_.transpose() * inner;
}

std::shared_ptr<const SlowTwist> make_slow_twist(std::vector<TwistBlock> blocks, const Matrix& theta) {
    return std::make_shared<const SlowTwist>(std::move(blocks), theta);
}

std::shared_ptr<const SlowTwist> make_slow_twist(int dim, const AngleProfile& profile,
                                                 const Matrix& theta) {
    if (dim < 1) throw InvalidInput("make_slow_twist: dim must be >= 1");
    std::vector<TwistBlock> blocks;
    for (int i = 0; i + 1 < dim; i += 2) blocks.push_back({TwistBlock::Kind::Rotation2, profile});
    if (dim % 2 == 1) blocks.push_back({TwistBlock::Kind::Identity1, {}});
    return make_slow_twist(std::move(blocks), theta);
}

MapPtr compose_with_motion(MapPtr map, const std::optional<EuclideanMotion>& pre,
                           const std::optional<EuclideanMotion>& post) {
    if (!map) throw InvalidInput("compose_with_motion: null map");
    const int d = map->dim();
    if ((pre && pre->dim() != d) || (post && post->dim() != d)) {
        throw InvalidInput("compose_with_motion: dimension mismatch");
    }
    return std::make_shared<ComposedMap>(std::move(map), pre ? *pre : identity_motion(d),
                                         post ? *post : identity_motion(d));
}

double pointwise_distortion(const Matrix& jac) {
    const Eigen::JacobiSVD<Matrix> solver(jac);
    const Vector& sv = solver.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    return std::max(1.0 - smin * smin, smax * smax - 1.0);
}

std::vector<Matrix> jacobians_on(const DifferentiableMap& map, const BallSample& sample) {
    if (sample.ball.dim() != map.dim()) throw InvalidInput("jacobians_on: dimension mismatch");
    std::vector<Matrix> out(sample.size());
    parallel_for(sample.size(), [&](std::size_t i) {
        const Vector x = sample.point(i);
        out[i] = map.jacobian(x);
        if (!out[i].allFinite()) {
            throw EvaluationError(map.name() + ": non-finite Jacobian at " + describe_point(x));
        }
    });
    return out;
}

DistortionReport distortion_estimate(const DifferentiableMap& map, const Ball& region,
                                     std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("distortion_estimate: n must be >= 1");
    const BallSample sample = sample_ball(region, n, seed);
    const std::vector<Matrix> jacs = jacobians_on(map, sample);
    std::vector<double> dist(n);
    parallel_for(n, [&](std::size_t i) { dist[i] = pointwise_distortion(jacs[i]); });

    std::size_t worst = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (dist[i] > dist[worst]) worst = i;
    return DistortionReport{std::max(0.0, dist[worst]), sample.point(worst), n};
}

ApproximationResult approximation_lemma_check(const DifferentiableMap& map, double eps,
                                              std::size_t n, std::uint64_t seed, double radius) {
    if (n < 1) throw InvalidInput("approximation_lemma_check: n must be >= 1");
    const int d = map.dim();
    const Ball region = make_ball(Vector::Zero(d), radius);

    const BallSample fit = sample_ball(region, n, derive_seed(seed, 0));
    Matrix images(d, static_cast<Eigen::Index>(n));
    parallel_for(n, [&](std::size_t i) {
        images.col(static_cast<Eigen::Index>(i)) = map.eval(fit.point(i));
    });
    const ProcrustesFit pf = procrustes_motion(fit.points, images, OrthogonalClass::Any);
    const Vector& sv = pf.covariance_singular_values;
    if (!(sv(sv.size() - 1) > Tolerances::rank_cutoff * std::max(1.0, sv(0)))) {
        throw DegenerateInput("approximation_lemma_check: rank-deficient sample covariance",
                              sv(sv.size() - 1));
    }

    const BallSample check = sample_ball(region, n, derive_seed(seed, 1));
    std::vector<double> err(n);
    parallel_for(n, [&](std::size_t i) {
        const Vector x = check.point(i);
        err[i] = (map.eval(x) - pf.motion.apply(x)).norm();
    });
    double sup = 0.0;
    for (double e : err) sup = std::max(sup, e);
    const double ratio = eps > 0.0 ? sup / eps : 0.0;
    return ApproximationResult{pf.motion, sup, ratio};
}

}  // namespace distortlab
