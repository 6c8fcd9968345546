#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "distortlab/ball.hpp"
#include "distortlab/linalg.hpp"

namespace distortlab {

/// A map R^D -> R^D with point and Jacobian evaluation.
///
/// Implementations are immutable after construction and must be safe to call
/// concurrently. The Jacobian is expected to agree with central differences
/// of eval() to O(h^2).
class DifferentiableMap {
public:
    virtual ~DifferentiableMap() = default;

    virtual int dim() const = 0;
    virtual Vector eval(const Vector& x) const = 0;
    virtual Matrix jacobian(const Vector& x) const = 0;
    virtual std::string name() const = 0;
};

using MapPtr = std::shared_ptr<const DifferentiableMap>;
using VectorFunction = std::function<Vector(const Vector&)>;
using JacobianFunction = std::function<Matrix(const Vector&)>;

/// Central differences with step h; h defaults to 1e-5 * max(1, |x|).
Matrix finite_difference_jacobian(const VectorFunction& f, const Vector& x,
                                  std::optional<double> h = std::nullopt);

MapPtr make_identity_map(int dim);

/// x -> linear * x + offset. Any square linear part is accepted.
MapPtr make_affine_map(Matrix linear, Vector offset);
MapPtr make_motion_map(const EuclideanMotion& motion);

/// Wraps user callables. Without an analytic Jacobian, central differences
/// with h = 1e-5 * max(1, |x|) are used.
MapPtr make_callable_map(int dim, VectorFunction eval,
                         std::optional<JacobianFunction> jacobian = std::nullopt,
                         std::string name = "callable");

/// Rotation angle as a function of the radius t = |x|.
struct AngleProfile {
    std::string kind;
    double amplitude = 0.0;
    double clamp = 0.0;
    std::function<double(double)> f;
    std::function<double(double)> f_prime;
    /// sup over t >= 0 of t * |f'(t)|.
    double c_bound = 0.0;
};

/// f(t) = a * atan(t); sup t|f'| = |a| / 2 at t = 1.
AngleProfile arctan_profile(double amplitude);
/// f(t) = a * ln(sqrt(t^2 + t0^2) / t0), a smooth version of
/// a * ln(max(t, t0) / t0). t f'(t) = a t^2 / (t^2 + t0^2) -> a above the clamp.
AngleProfile log_profile(double amplitude, double clamp = 0.1);
/// f(t) = theta.
AngleProfile constant_profile(double theta);

struct TwistBlock {
    enum class Kind { Identity1, Rotation2 };
    Kind kind = Kind::Identity1;
    AngleProfile profile;  // used by Rotation2 only

    int size() const { return kind == Kind::Rotation2 ? 2 : 1; }
};

/// Phi(x) = Theta^T S_x (Theta x), S_x block diagonal with 1x1 identities and
/// 2x2 rotations by f_i(|x|).
class SlowTwist final : public DifferentiableMap {
public:
    SlowTwist(std::vector<TwistBlock> blocks, Matrix theta);

    int dim() const override { return dim_; }
    Vector eval(const Vector& x) const override;
    Matrix jacobian(const Vector& x) const override;
    std::string name() const override { return "slow-twist"; }

    const std::vector<TwistBlock>& blocks() const { return blocks_; }
    const Matrix& theta() const { return theta_; }
    /// Largest c_bound over the rotation blocks.
    double c_bound() const;

private:
    int dim_;
    std::vector<TwistBlock> blocks_;
    Matrix theta_;
};

/// floor(dim / 2) rotation blocks sharing `profile`, then one identity block
/// when dim is odd.
std::shared_ptr<const SlowTwist> make_slow_twist(int dim, const AngleProfile& profile,
                                                 const Matrix& theta);
std::shared_ptr<const SlowTwist> make_slow_twist(std::vector<TwistBlock> blocks,
                                                 const Matrix& theta);

/// post o map o pre, with the chain-rule Jacobian. Missing motions are identities.
MapPtr compose_with_motion(MapPtr map, const std::optional<EuclideanMotion>& pre,
                           const std::optional<EuclideanMotion>& post);

/// max(1 - s_min^2, s_max^2 - 1) over the singular values s of jac.
double pointwise_distortion(const Matrix& jac);

struct DistortionReport {
    double eps_hat = 0.0;
    Vector worst_point;
    std::size_t n_samples = 0;
};

/// Sampled distortion of `map` over `region` (polar sampling, n points).
/// eps_hat is a lower estimate of the true sup.
DistortionReport distortion_estimate(const DifferentiableMap& map, const Ball& region,
                                     std::size_t n, std::uint64_t seed);

/// Jacobian at every sample point, in sample order. Throws EvaluationError
/// naming the point on non-finite output.
std::vector<Matrix> jacobians_on(const DifferentiableMap& map, const BallSample& sample);

struct ApproximationResult {
    EuclideanMotion motion;
    double sup_err = 0.0;
    /// sup_err / eps, the empirical constant of the approximation estimate.
    double ratio = 0.0;
};

/// Fits a Euclidean motion A to (x, Phi(x)) on n points of B(0, radius) by
/// least squares, then reports sup |Phi(x) - A(x)| over a fresh n-point sample.
ApproximationResult approximation_lemma_check(const DifferentiableMap& map, double eps,
                                              std::size_t n, std::uint64_t seed,
                                              double radius = 10.0);

}  // namespace distortlab
