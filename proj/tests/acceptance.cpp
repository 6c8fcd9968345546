// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "distortlab/alignment.hpp"
#include "distortlab/ball.hpp"
#include "distortlab/experiment.hpp"
#include "distortlab/maps.hpp"
#include "distortlab/parallel.hpp"
#include "distortlab/pde.hpp"
#include "distortlab/random.hpp"
#include "distortlab/theorems.hpp"

using namespace distortlab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

void fail_if(Outcome& o, bool bad, const std::string& why) {
    if (bad) {
        o.pass = false;
        o.detail += (o.detail.empty() ? "" : "; ") + why;
    }
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix rot2(double a) {
    Matrix r(2, 2);
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

Matrix refl2(double a) {
    Matrix r(2, 2);
    r << std::cos(a), std::sin(a), std::sin(a), -std::cos(a);
    return r;
}

// ---------------------------------------------------------------------------
// 1. Exact cases.

Outcome exactness() {
    Outcome o;
    double worst_eps = 0.0, worst_t = 0.0, worst_dev = 0.0, worst_tail = 0.0;
    std::vector<std::pair<MapPtr, Matrix>> rigid;
    for (int d : {2, 3}) rigid.emplace_back(make_identity_map(d), Matrix::Identity(d, d));
    for (int d : {2, 3, 5}) {
        const Matrix r = random_rotation(d, 40 + static_cast<unsigned>(d));
        rigid.emplace_back(make_affine_map(r, Vector::LinSpaced(d, -3.0, 2.0)), r);
    }
    for (const auto& [map, r] : rigid) {
        const int d = map->dim();
        const Ball b = make_ball(Vector::Constant(d, 0.5), 2.0);
        worst_eps = std::max(worst_eps, distortion_estimate(*map, b, 20000, 1).eps_hat);
        const TheoremReport t = tail_check(*map, b, 20000, 1, kDefaultLambdas);
        worst_t = std::max(worst_t, (t.t_b - r).cwiseAbs().maxCoeff());
        worst_dev = std::max({worst_dev, t.mean_dev, t.p4_dev});
        for (const TailPoint& p : t.tail) worst_tail = std::max(worst_tail, p.fraction);
    }
    fail_if(o, worst_eps > 1e-12, "distortion " + num(worst_eps));
    fail_if(o, worst_t > 1e-12, "T_B error " + num(worst_t));
    fail_if(o, worst_dev > 1e-10, "deviation " + num(worst_dev));
    fail_if(o, worst_tail > 1e-10, "tail " + num(worst_tail));

    double worst_pde = 0.0;
    for (int d : {2, 3}) {
        Matrix g = Matrix::Zero(d, d);
        g(0, 1) = 0.7;
        g(1, 0) = -0.7;
        g(d - 1, 0) += 0.2;
        g(0, d - 1) -= 0.2;
        const GridField field = sample_grid_field(d, 4.0, d == 2 ? 33 : 17,
                                                  [&](const Vector& x) -> Vector { return g * x; });
        worst_pde = std::max(worst_pde, antisymmetric_approximation(field).residual);
    }
    fail_if(o, worst_pde > 1e-10, "pde residual " + num(worst_pde));

    double worst_delta = 0.0, worst_align = 0.0;
    for (int d : {2, 3, 4}) {
        for (int k : {3, 8}) {
            const LabeledPointSet y = random_configuration(k, d, 7 + static_cast<unsigned>(k * d));
            const EuclideanMotion m = make_motion(random_rotation(d, 3), Vector::Constant(d, 1.5));
            const LabeledPointSet z = make_point_set((m.rotation * y.points).colwise() + m.translation);
            const AlignmentResult a = procrustes_align(y, z, true);
            worst_delta = std::max(worst_delta, a.delta_in);
            worst_align = std::max(worst_align, a.max_rel_err);
        }
    }
    fail_if(o, worst_delta > 1e-12, "delta " + num(worst_delta));
    fail_if(o, worst_align > 1e-10, "max_rel_err " + num(worst_align));
    if (o.pass) {
        o.detail = "eps_hat<=" + num(worst_eps) + " T_B err<=" + num(worst_t) + " dev<=" + num(worst_dev) +
                   " pde<=" + num(worst_pde) + " align<=" + num(worst_align);
    }
    return o;
}

// ---------------------------------------------------------------------------
// 2 and 3. Rate sweep for arctan slow twists.

const std::vector<double> kEpsGrid = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};

std::vector<SweepResult>& sweeps() {
    static std::vector<SweepResult> cache;
    if (cache.empty()) {
        for (int d : {2, 3}) {
            const MapFamily family = [d](double eps) -> MapPtr {
                return make_slow_twist(d, arctan_profile(eps), random_rotation(d, 5));
            };
            cache.push_back(eps_sweep(family, kEpsGrid, unit_ball(d), 200000, 11));
        }
    }
    return cache;
}

Outcome linear_rate() {
    Outcome o;
    std::string info;
    for (std::size_t i = 0; i < sweeps().size(); ++i) {
        const SweepResult& s = sweeps()[i];
        const std::string dim = "D=" + std::to_string(i + 2);
        fail_if(o, std::abs(s.fitted_slope - 1.0) > 0.15, dim + " slope " + num(s.fitted_slope));
        // Ratio against the nominal eps of the grid.
        double lo = 1e300, hi = 0.0;
        for (std::size_t k = 0; k < kEpsGrid.size(); ++k) {
            lo = std::min(lo, s.mean_devs[k] / kEpsGrid[k]);
            hi = std::max(hi, s.mean_devs[k] / kEpsGrid[k]);
        }
        fail_if(o, hi / lo > 2.0, dim + " ratio spread " + num(hi / lo));
        info += dim + " slope " + num(s.fitted_slope) + " spread " + num(hi / lo) + " ";
    }
    if (o.pass) o.detail = info;
    return o;
}

Outcome sqrt_rate() {
    Outcome o;
    std::string info;
    for (std::size_t i = 0; i < sweeps().size(); ++i) {
        const SweepResult& s = sweeps()[i];
        const std::string dim = "D=" + std::to_string(i + 2);
        // A single constant read off at the top of the grid must bound the
        // sqrt-normalized deviations everywhere below it.
        const std::size_t top = kEpsGrid.size() - 1;
        const double c_mean = s.mean_devs[top] / std::sqrt(kEpsGrid[top]);
        const double c_p4 = s.p4_devs[top] / std::sqrt(kEpsGrid[top]);
        for (std::size_t k = 0; k < kEpsGrid.size(); ++k) {
            const double rm = s.mean_devs[k] / std::sqrt(kEpsGrid[k]);
            const double rp = s.p4_devs[k] / std::sqrt(kEpsGrid[k]);
            fail_if(o, rm > c_mean, dim + " mean/sqrt(eps) " + num(rm) + " > " + num(c_mean));
            fail_if(o, rp > c_p4, dim + " p4/sqrt(eps) " + num(rp) + " > " + num(c_p4));
            fail_if(o, !(s.mean_devs[k] <= s.p4_devs[k]), dim + " mean_dev > p4_dev");
        }
        info += dim + " C_mean " + num(c_mean) + " C_p4 " + num(c_p4) + " ";
    }
    if (o.pass) o.detail = info + "mean<=p4 on all runs";
    return o;
}

// ---------------------------------------------------------------------------
// 4. Exponential tail and its sharpness.

Outcome tail_bound() {
    Outcome o;
    const SharpnessResult s = sharpness_experiment(0.1, 1000000, 3, 2, 0.1, kDefaultLambdas);
    std::string info = "C=" + num(s.report.calibration_c);
    for (std::size_t i = 0; i < s.report.tail.size(); ++i) {
        const TailPoint& t = s.report.tail[i];
        fail_if(o, t.fraction > s.report.tail_bounds[i],
                "fraction(" + num(t.lambda) + ")=" + num(t.fraction) + " > " + num(s.report.tail_bounds[i]));
        info += " f(" + num(t.lambda) + ")=" + num(t.fraction);
        if (t.lambda == 2.0) fail_if(o, t.fraction < std::exp(-8.0), "fraction(2) below exp(-8)");
    }
    if (o.pass) o.detail = info;
    return o;
}

// ---------------------------------------------------------------------------
// 5. Algebraic identity on every shipped map kind.

Outcome quadratic_relation() {
    Outcome o;
    std::vector<MapPtr> maps;
    for (int d : {2, 3, 4}) {
        maps.push_back(make_identity_map(d));
        maps.push_back(make_affine_map(random_rotation(d, 2), Vector::Ones(d)));
        maps.push_back(make_affine_map(random_rotation(d, 2) * 1.05, Vector::Zero(d)));
    }
    for (int d : {2, 3, 5, 6}) {
        maps.push_back(make_slow_twist(d, arctan_profile(0.1), random_rotation(d, 9)));
        maps.push_back(make_slow_twist(d, log_profile(0.05, 0.1), Matrix::Identity(d, d)));
    }
    const MapPtr twist = make_slow_twist(3, arctan_profile(0.2), Matrix::Identity(3, 3));
    maps.push_back(compose_with_motion(twist, make_motion(random_rotation(3, 1), Vector::Ones(3)),
                                       make_motion(random_rotation(3, 2), Vector::Zero(3))));
    for (const std::string& kind : {"identity", "rotation", "slow-twist"}) {
        ExperimentConfig c;
        c.dim = 3;
        c.map = kind;
        c.theta_seed = 4;
        maps.push_back(build_map(c));
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const int d = maps[i]->dim();
        const BallSample s = sample_ball(make_ball(Vector::Zero(d), 3.0), 1000, 100 + i);
        const QuadraticRelation q = quadratic_relation_check(*maps[i], s);
        gap = std::max({gap, q.identity_gap, std::abs(q.max_residual - q.max_direct)});
    }
    fail_if(o, gap > 1e-12, "gap " + num(gap));
    if (o.pass) o.detail = std::to_string(maps.size()) + " maps, max gap " + num(gap);
    return o;
}

// ---------------------------------------------------------------------------
// 6. John-Nirenberg for ln|x|.

Outcome john_nirenberg() {
    Outcome o;
    ExperimentConfig c;
    c.dim = 2;
    c.field = "log-radius";
    c.n_samples = 1000000;
    c.seed = 5;
    c.lambdas = {1.0, 2.0, 3.0, 4.0};
    const Report r = run_subcommand("jn", c);
    std::string info = "bmo " + num(r.scalar("bmo_estimate")) + " C=" + num(r.scalar("calibration_c"));
    for (const auto& row : r.table.rows) {
        fail_if(o, row[1] > row[2], "fraction(" + num(row[0]) + ")=" + num(row[1]) + " > " + num(row[2]));
        info += " f(" + num(row[0]) + ")=" + num(row[1]);
    }
    if (o.pass) o.detail = info;
    return o;
}

// ---------------------------------------------------------------------------
// 7. PDE estimate on random trigonometric fields.

// Frozen from the calibration ensemble (tools/pde_calibrate, seeds 1001-1500):
// max 0.278 for D = 2 (65 points), 0.132 for D = 3 (33 points), rounded up.
constexpr double kCEmp2 = 0.28;
constexpr double kCEmp3 = 0.14;

Outcome pde_estimate() {
    Outcome o;
    int violations = 0;
    double worst_asym = 0.0, worst2 = 0.0, worst3 = 0.0;
    for (int d : {2, 3}) {
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const GridField g = sample_grid_field(d, 4.0, d == 2 ? 65 : 33, random_trig_field(d, 3, seed));
            const AntisymmetricFit fit = antisymmetric_approximation(g);
            worst_asym = std::max(worst_asym, (fit.s + fit.s.transpose()).cwiseAbs().maxCoeff());
            const double limit = d == 2 ? kCEmp2 : kCEmp3;
            (d == 2 ? worst2 : worst3) = std::max(d == 2 ? worst2 : worst3, fit.constant);
            violations += fit.constant > limit;
        }
    }
    fail_if(o, worst_asym > 1e-12, "S asymmetry " + num(worst_asym));
    fail_if(o, violations > 0, std::to_string(violations) + " fields above C_emp");

    double lo = 1.0, hi = 0.0;
    for (int d : {2, 3}) {
        for (std::uint64_t seed = 1; seed <= (d == 2 ? 5u : 3u); ++seed) {
            const VectorFunction f = random_trig_field(d, 3, seed);
            const int coarse = d == 2 ? 129 : 33;
            const double a = third_derivative_identity_check(sample_grid_field(d, 4.0, coarse, f));
            const double b = third_derivative_identity_check(sample_grid_field(d, 4.0, 2 * coarse - 1, f));
            lo = std::min(lo, b / a);
            hi = std::max(hi, b / a);
        }
    }
    fail_if(o, lo < 0.20 || hi > 0.30, "convergence ratios in [" + num(lo) + ", " + num(hi) + "]");
    if (o.pass) {
        o.detail = "max C " + num(worst2) + " (D=2, C_emp " + num(kCEmp2) + "), " + num(worst3) + " (D=3, C_emp " +
                   num(kCEmp3) + "); identity ratios [" + num(lo) + ", " + num(hi) + "]";
    }
    return o;
}

// ---------------------------------------------------------------------------
// 8. Alignment.

double brute_rms(const Matrix& y, const Matrix& z, bool proper) {
    const Matrix y0 = y.colwise() - Vector(y.rowwise().mean());
    const Matrix z0 = z.colwise() - Vector(z.rowwise().mean());
    double best = 1e300;
    const int steps = 100000;
    for (int k = 0; k < steps; ++k) {
        const double a = 2.0 * std::numbers::pi * k / steps;
        best = std::min(best, (z0 - rot2(a) * y0).squaredNorm());
        if (!proper) best = std::min(best, (z0 - refl2(a) * y0).squaredNorm());
    }
    return std::sqrt(best / static_cast<double>(y.cols()));
}

Outcome alignment() {
    Outcome o;
    double worst_rms = 0.0;
    double min_det = 1.0;
    for (std::uint64_t t = 0; t < 50; ++t) {
        const LabeledPointSet y = random_configuration(5 + static_cast<int>(t % 4), 2, 500 + t);
        Rng rng(derive_seed(77, t));
        std::normal_distribution<double> n(0.0, 0.03);
        Matrix z = (t % 2 ? refl2(0.3 * t) : rot2(0.3 * t)) * y.points;
        for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += n(rng);
        const LabeledPointSet zs = make_point_set(z);
        const bool proper = t % 3 == 0;
        const AlignmentResult a = procrustes_align(y, zs, proper);
        worst_rms = std::max(worst_rms, std::abs(a.rms_err - brute_rms(y.points, z, proper)));
        const AlignmentResult p = procrustes_align(y, zs, true);
        min_det = std::min(min_det, p.motion.rotation.determinant());
    }
    for (int d = 2; d <= 6; ++d) {
        for (int k : {2, d, d + 3}) {
            Matrix flip = Matrix::Identity(d, d);
            flip(0, 0) = -1.0;
            const LabeledPointSet y = random_configuration(k, d, static_cast<unsigned>(k * 10 + d));
            const AlignmentResult p = procrustes_align(y, make_point_set(flip * y.points), true);
            min_det = std::min(min_det, p.motion.rotation.determinant());
        }
    }
    fail_if(o, worst_rms > 1e-3, "rms gap " + num(worst_rms));
    fail_if(o, std::abs(min_det - 1.0) > 1e-12, "proper det " + num(min_det));

    const std::vector<double> deltas = {0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2};
    const auto rows = delta_to_eps_sweep(4, 2, deltas, 100, 21);
    std::vector<double> means;
    for (const auto& r : rows) means.push_back(r.mean_max_rel_err);
    const double rho = spearman_correlation(deltas, means);
    fail_if(o, rho < 0.9, "spearman " + num(rho));
    fail_if(o, rows.front().max_max_rel_err > 1e-10, "delta=0 error " + num(rows.front().max_max_rel_err));
    if (o.pass) {
        o.detail = "rms gap " + num(worst_rms) + ", proper det " + num(min_det) + ", spearman " + num(rho) +
                   ", err(delta=0) " + num(rows.front().max_max_rel_err);
    }
    return o;
}

// ---------------------------------------------------------------------------
// 9. Determinism, in-process and through the command-line tool.

std::string strip_wall_time(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("wall_time_s") == std::string::npos) out += line + '\n';
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const char* cli) {
    Outcome o;
    int compared = 0;
    for (const char* name : kSubcommands) {
        for (const char* format : {"csv", "json"}) {
            ExperimentConfig c;
            c.n_samples = 30000;
            c.trials = 10;
            c.format = format;
            c.threads = 1;
            const ReportFormat f = parse_format(format);
            const std::string serial = serialize_report(run_subcommand(name, c), f, false);
            c.threads = 4;
            const std::string parallel = serialize_report(run_subcommand(name, c), f, false);
            const std::string again = serialize_report(run_subcommand(name, c), f, false);
            fail_if(o, serial != parallel || parallel != again, std::string(name) + "/" + format + " differs");
            compared += 3;
        }
    }
    if (cli != nullptr) {
        const auto dir = std::filesystem::temp_directory_path() / "distortlab_acceptance";
        std::filesystem::create_directories(dir);
        for (const char* name : kSubcommands) {
            std::string texts[2];
            for (int run = 0; run < 2; ++run) {
                const auto out = dir / (std::string(name) + std::to_string(run) + ".json");
                const std::string cmd = std::string(cli) + " " + name + " n_samples=30000 trials=10 --threads " +
                                        (run ? "4" : "1") + " -o " + out.string() + " >/dev/null 2>&1";
                const int status = std::system(cmd.c_str());
                fail_if(o, !WIFEXITED(status) || WEXITSTATUS(status) == 1, std::string("cli ") + name + " failed");
                texts[run] = strip_wall_time(slurp(out));
            }
            fail_if(o, texts[0].empty() || texts[0] != texts[1], std::string("cli ") + name + " differs");
            ++compared;
        }
    }
    if (o.pass) o.detail = std::to_string(compared) + " report pairs byte-identical (wall time excluded)";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const char* cli = argc > 1 ? argv[1] : nullptr;
    const std::vector<Criterion> criteria = {
        {1, "exactness", 1.0, exactness},
        {2, "linear BMO rate", 120.0, linear_rate},
        {3, "sqrt rate and moment ordering", 120.0, sqrt_rate},
        {4, "exponential tail", 60.0, tail_bound},
        {5, "quadratic relation", 0.0, quadratic_relation},
        {6, "John-Nirenberg for ln|x|", 0.0, john_nirenberg},
        {7, "PDE estimate", 120.0, pde_estimate},
        {8, "alignment", 60.0, alignment},
        {9, "determinism", 0.0, [cli] { return determinism(cli); }},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double t = seconds_since(t0);
        if (c.budget_s > 0.0) fail_if(o, t > c.budget_s, "runtime " + num(t) + " s > " + num(c.budget_s) + " s");
        failed += !o.pass;
        std::printf("criterion %d %-32s %s  %s  [%.2f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), t);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
