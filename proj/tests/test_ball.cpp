#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "distortlab/ball.hpp"
#include "distortlab/error.hpp"
#include "distortlab/parallel.hpp"

using namespace distortlab;

namespace {

constexpr std::size_t kN = 200000;

// Sample mean and a 5-sigma tolerance for statistic g.
template <class G>
std::pair<double, double> mean_and_tol(const BallSample& s, G g) {
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = g(s.point(i));
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(s.size());
    const double mean = sum / n;
    const double var = std::max(sq / n - mean * mean, 0.0);
    return {mean, 5.0 * std::sqrt(var / n)};
}

class SchemeTest : public ::testing::TestWithParam<SamplingScheme> {};

}  // namespace

TEST_P(SchemeTest, DiskMomentsMatchClosedForms) {
    const BallSample s = sample_ball(unit_ball(2), kN, 3, GetParam());
    ASSERT_EQ(s.size(), kN);
    auto [abs_x, tol_x] = mean_and_tol(s, [](const Vector& x) { return std::abs(x(0)); });
    EXPECT_NEAR(abs_x, 4.0 / (3.0 * std::numbers::pi), tol_x);
    auto [r, tol_r] = mean_and_tol(s, [](const Vector& x) { return x.norm(); });
    EXPECT_NEAR(r, 2.0 / 3.0, tol_r);
    auto [r2, tol_r2] = mean_and_tol(s, [](const Vector& x) { return x.squaredNorm(); });
    EXPECT_NEAR(r2, 0.5, tol_r2);
}

TEST_P(SchemeTest, MeanRadiusInHigherDimension) {
    const int d = 5;
    const Ball b = make_ball(Vector::Constant(d, 2.0), 3.0);
    const BallSample s = sample_ball(b, kN, 4, GetParam());
    auto [r, tol] = mean_and_tol(s, [&](const Vector& x) { return (x - b.center).norm(); });
    EXPECT_NEAR(r, 3.0 * d / (d + 1.0), tol);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_TRUE(b.contains(s.point(i)));
}

INSTANTIATE_TEST_SUITE_P(Schemes, SchemeTest,
                         ::testing::Values(SamplingScheme::UniformRejection, SamplingScheme::Polar));

TEST(Sampling, IndependentOfThreadCount) {
    set_thread_count(1);
    const BallSample a = sample_ball(unit_ball(3), 3 * BallSample::kBlockSize + 17, 99);
    set_thread_count(4);
    const BallSample b = sample_ball(unit_ball(3), 3 * BallSample::kBlockSize + 17, 99);
    set_thread_count(0);
    EXPECT_EQ(a.points, b.points);
    EXPECT_NE(a.points, sample_ball(unit_ball(3), a.size(), 100).points);
}

TEST(Sampling, RejectsBadInput) {
    EXPECT_THROW(make_ball(Vector::Zero(2), 0.0), InvalidInput);
    EXPECT_THROW(make_ball(Vector::Zero(0), 1.0), InvalidInput);
    EXPECT_THROW(sample_ball(unit_ball(8), 10, 1, SamplingScheme::UniformRejection), InvalidInput);
}

TEST(Moments, OrderedAndExact) {
    const std::vector<double> devs = {1.0, 2.0, 3.0, 4.0};
    const DeviationMoments m = deviation_moments(devs);
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.p4, std::pow((1 + 16 + 81 + 256) / 4.0, 0.25), 1e-15);
    EXPECT_DOUBLE_EQ(m.max, 4.0);
    EXPECT_LE(m.mean, m.p4);
    EXPECT_LE(m.p4, m.max);
    const std::vector<double> flat(1000, 0.1);
    const DeviationMoments f = deviation_moments(flat);
    EXPECT_LE(f.mean, f.p4);
    EXPECT_LE(f.p4, f.max);
}

TEST(Tail, CalibrationHitsOneOverE) {
    std::vector<double> devs(100);
    std::iota(devs.begin(), devs.end(), 1.0);
    const double c = calibrate_tail_constant(devs, 1.0);
    EXPECT_DOUBLE_EQ(c, 64.0);
    const double lambdas[] = {1.0};
    const auto t = tail_fractions(devs, c, lambdas);
    EXPECT_DOUBLE_EQ(t[0].fraction, 0.36);
    EXPECT_DOUBLE_EQ(calibrate_tail_constant(std::vector<double>(5, 0.0), 0.0), 1.0);
}

TEST(Tail, BinomialSigma) {
    EXPECT_DOUBLE_EQ(binomial_sigma(0.5, 100), 0.05);
    EXPECT_DOUBLE_EQ(binomial_sigma(0.0, 100), 0.0);
}

TEST(Oscillation, LogRadiusMeanDeviationIsOneOverE) {
    // On B(0, rho) in the plane, ln|x| has mean ln(rho) - 1/2 and mean absolute
    // deviation 1/e, independently of rho.
    const ScalarField f = [](const Vector& x) { return std::log(x.norm()); };
    for (double rho : {1.0, 0.01, 50.0}) {
        const BallSample s = sample_ball(make_ball(Vector::Zero(2), rho), kN, 5);
        const OscillationStats st = mean_oscillation(f, s);
        EXPECT_NEAR(st.h_b(0, 0), std::log(rho) - 0.5, 0.01);
        EXPECT_NEAR(st.mean_dev, 1.0 / std::numbers::e, 0.005) << rho;
    }
}

TEST(Oscillation, LinearFieldScalesWithRadius) {
    const ScalarField f = [](const Vector& x) { return x(0); };
    const std::vector<Ball> balls = {make_ball(Vector::Zero(2), 1.0), make_ball(Vector::Constant(2, 5.0), 2.0)};
    const double est = bmo_norm_estimate(f, balls, kN, 6);
    EXPECT_NEAR(est, 2.0 * 4.0 / (3.0 * std::numbers::pi), 0.01);
}

TEST(Oscillation, GivenCenteringAndMatrixField) {
    const MatrixField f = [](const Vector& x) {
        Matrix m(2, 2);
        m << x(0), 0, 0, x(1);
        return m;
    };
    const BallSample s = sample_ball(unit_ball(2), 50000, 7);
    const OscillationStats st = mean_oscillation(f, s, Matrix::Zero(2, 2));
    EXPECT_EQ(st.h_b, Matrix::Zero(2, 2));
    // E|x| over the unit disk is 2/3.
    EXPECT_NEAR(st.mean_dev, 2.0 / 3.0, 0.01);
    EXPECT_LE(st.mean_dev, st.p4_dev);
    EXPECT_LE(st.p4_dev, st.max_dev);
    EXPECT_LT(st.max_dev, 1.0);
}

TEST(Oscillation, NonFiniteFieldNamesPoint) {
    const ScalarField f = [](const Vector& x) { return x(0) > 0.9 ? std::nan("") : 0.0; };
    const BallSample s = sample_ball(unit_ball(2), 10000, 8);
    try {
        mean_oscillation(f, s);
        FAIL();
    } catch (const EvaluationError& e) {
        EXPECT_NE(std::string(e.what()).find("("), std::string::npos);
    }
}

TEST(JohnNirenberg, ValidatesLambdas) {
    const ScalarField f = [](const Vector& x) { return x(0); };
    const BallSample s = sample_ball(unit_ball(2), 100, 9);
    const std::vector<double> bad = {0.5};
    const std::vector<double> unsorted = {2.0, 1.0};
    EXPECT_THROW(jn_tail(f, s, 0.0, bad, 1.0, 1.0), InvalidInput);
    EXPECT_THROW(jn_tail(f, s, 0.0, unsorted, 1.0, 1.0), InvalidInput);
    EXPECT_THROW(jn_tail(f, s, 0.0, std::vector<double>{}, 1.0, 1.0), InvalidInput);
}

TEST(JohnNirenberg, LogRadiusTailUnderExponential) {
    const ScalarField f = [](const Vector& x) { return std::log(x.norm()); };
    const BallSample s = sample_ball(unit_ball(2), kN, 10);
    const OscillationStats st = mean_oscillation(f, s);
    const std::vector<double> all = [&] {
        std::vector<double> d(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) d[i] = std::abs(f(s.point(i)) - st.h_b(0, 0));
        return d;
    }();
    const double c = calibrate_tail_constant(all, st.mean_dev);
    const std::vector<double> lambdas = {1.0, 2.0, 3.0, 4.0};
    for (const TailPoint& t : jn_tail(f, s, st.h_b(0, 0), lambdas, st.mean_dev, c)) {
        const double b = std::exp(-t.lambda);
        EXPECT_LE(t.fraction, b + 3.0 * binomial_sigma(b, s.size())) << t.lambda;
    }
}
