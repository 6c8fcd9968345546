#include "distortlab/ball.hpp"

#include <algorithm>
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

void check_lambdas(std::span<const double> lambdas) {
    if (lambdas.empty()) throw InvalidInput("jn_tail: empty lambda list");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 1.0)) throw InvalidInput("jn_tail: lambda must be >= 1");
        if (i > 0 && lambdas[i] < lambdas[i - 1]) throw InvalidInput("jn_tail: lambdas not sorted");
    }
}

}  // namespace

Ball make_ball(Vector center, double radius) {
    if (center.size() < 1) throw InvalidInput("make_ball: empty center");
    require_finite(center, "make_ball");
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidInput("make_ball: radius must be positive and finite");
    }
    return Ball{std::move(center), radius};
}

Ball unit_ball(int dim) { return make_ball(Vector::Zero(dim), 1.0); }

BallSample sample_ball(const Ball& ball, std::size_t count, std::uint64_t seed,
                       SamplingScheme scheme) {
    if (count < 1) throw InvalidInput("sample_ball: count must be >= 1");
    const int dim = ball.dim();
    if (scheme == SamplingScheme::UniformRejection && dim > 6) {
        throw InvalidInput("sample_ball: rejection sampling supports dim <= 6 only");
    }

    BallSample out{ball, Matrix(dim, static_cast<Eigen::Index>(count)), seed, scheme};
    const std::size_t blocks = (count + BallSample::kBlockSize - 1) / BallSample::kBlockSize;

    parallel_for(blocks, [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::normal_distribution<double> normal;
        const std::size_t begin = b * BallSample::kBlockSize;
        const std::size_t end = std::min(count, begin + BallSample::kBlockSize);
        Vector u(dim);
        for (std::size_t i = begin; i < end; ++i) {
            for (;;) {
                if (scheme == SamplingScheme::UniformRejection) {
                    for (int k = 0; k < dim; ++k) u(k) = 2.0 * uniform(rng) - 1.0;
                    if (u.squaredNorm() < 1.0) break;
                } else {
                    double len = 0.0;
                    do {
                        for (int k = 0; k < dim; ++k) u(k) = normal(rng);
                        len = u.norm();
                    } while (len == 0.0);
                    const double r = std::pow(uniform(rng), 1.0 / dim);
                    u *= r / len;
                    if (u.norm() < 1.0) break;
                }
            }
            out.points.col(static_cast<Eigen::Index>(i)) = ball.center + ball.radius * u;
        }
    });
    return out;
}

MatrixField as_matrix_field(ScalarField f) {
    return [f = std::move(f)](const Vector& x) {
        Matrix m(1, 1);
        m(0, 0) = f(x);
        return m;
    };
}

DeviationMoments deviation_moments(std::span<const double> devs) {
    if (devs.empty()) throw InvalidInput("deviation_moments: empty input");
    double sum = 0.0;
    double sum4 = 0.0;
    double max = 0.0;
    for (double d : devs) {
        sum += d;
        const double d2 = d * d;
        sum4 += d2 * d2;
        max = std::max(max, d);
    }
    const double n = static_cast<double>(devs.size());
    DeviationMoments m{sum / n, std::pow(sum4 / n, 0.25), max};
    // Rounding in the two sums can invert the ordering when all deviations
    // are (nearly) equal; the power-mean chain holds exactly in real numbers.
    m.p4 = std::clamp(m.p4, m.mean, m.max);
    return m;
}

std::vector<Matrix> evaluate_field(const MatrixField& f, const BallSample& sample) {
    std::vector<Matrix> values(sample.size());
    parallel_for(sample.size(), [&](std::size_t i) {
        const Vector x = sample.point(i);
        values[i] = f(x);
        if (!values[i].allFinite()) {
            throw EvaluationError("field is non-finite at " + describe_point(x));
        }
    });
    return values;
}

Matrix sample_mean(std::span<const Matrix> values) {
    if (values.empty()) throw InvalidInput("sample_mean: empty input");
    Matrix sum = Matrix::Zero(values[0].rows(), values[0].cols());
    for (const Matrix& v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::vector<double> deviations(std::span<const Matrix> values, const Matrix& h) {
    std::vector<double> devs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) devs[i] = (values[i] - h).norm();
    return devs;
}

OscillationStats mean_oscillation(const MatrixField& f, const BallSample& sample,
                                  const std::optional<Matrix>& given_h) {
    const std::vector<Matrix> values = evaluate_field(f, sample);
    Matrix h = given_h ? *given_h : sample_mean(values);
    if (h.rows() != values[0].rows() || h.cols() != values[0].cols()) {
        throw InvalidInput("mean_oscillation: centering has wrong shape");
    }
    const std::vector<double> devs = deviations(values, h);
    const DeviationMoments m = deviation_moments(devs);
    return OscillationStats{std::move(h), m.mean, m.p4, m.max, {}};
}

OscillationStats mean_oscillation(const ScalarField& f, const BallSample& sample,
                                  const std::optional<double>& given_h) {
    std::optional<Matrix> h;
    if (given_h) h = Matrix::Constant(1, 1, *given_h);
    return mean_oscillation(as_matrix_field(f), sample, h);
}

double bmo_norm_estimate(const MatrixField& f, std::span<const Ball> balls,
                         std::size_t n_per_ball, std::uint64_t seed, SamplingScheme scheme) {
    if (balls.empty()) throw InvalidInput("bmo_norm_estimate: no balls");
    double best = 0.0;
    for (std::size_t b = 0; b < balls.size(); ++b) {
        const BallSample s = sample_ball(balls[b], n_per_ball, derive_seed(seed, b), scheme);
        best = std::max(best, mean_oscillation(f, s).mean_dev);
    }
    return best;
}

double bmo_norm_estimate(const ScalarField& f, std::span<const Ball> balls,
                         std::size_t n_per_ball, std::uint64_t seed, SamplingScheme scheme) {
    return bmo_norm_estimate(as_matrix_field(f), balls, n_per_ball, seed, scheme);
}

std::vector<TailPoint> tail_fractions(std::span<const double> devs, double unit,
                                      std::span<const double> lambdas) {
    std::vector<TailPoint> out;
    out.reserve(lambdas.size());
    const double n = static_cast<double>(devs.size());
    for (double lambda : lambdas) {
        const double threshold = lambda * unit;
        const auto hits = std::count_if(devs.begin(), devs.end(),
                                        [threshold](double d) { return d > threshold; });
        out.push_back({lambda, n > 0 ? static_cast<double>(hits) / n : 0.0});
    }
    return out;
}

double calibrate_tail_constant(std::span<const double> devs, double norm) {
    if (devs.empty()) throw InvalidInput("calibrate_tail_constant: empty input");
    if (!(norm > 0.0)) return 1.0;
    std::vector<double> sorted(devs.begin(), devs.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const auto allowed = static_cast<std::size_t>(std::floor(static_cast<double>(n) * std::exp(-1.0)));
    const double threshold = sorted[n - 1 - std::min(allowed, n - 1)];
    if (!(threshold > 0.0)) return 1.0;
    return threshold / norm;
}

std::vector<TailPoint> jn_tail(const MatrixField& f, const BallSample& sample,
                               const Matrix& h_b, std::span<const double> lambdas,
                               double norm_estimate, double calibration_c) {
    check_lambdas(lambdas);
    const std::vector<Matrix> values = evaluate_field(f, sample);
    const std::vector<double> devs = deviations(values, h_b);
    return tail_fractions(devs, calibration_c * norm_estimate, lambdas);
}

std::vector<TailPoint> jn_tail(const ScalarField& f, const BallSample& sample, double h_b,
                               std::span<const double> lambdas, double norm_estimate,
                               double calibration_c) {
    return jn_tail(as_matrix_field(f), sample, Matrix::Constant(1, 1, h_b), lambdas,
                   norm_estimate, calibration_c);
}

double binomial_sigma(double p, std::size_t n) {
    if (n == 0) return 0.0;
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

}  // namespace distortlab
