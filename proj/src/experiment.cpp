#include "distortlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "distortlab/alignment.hpp"
#include "distortlab/ball.hpp"
#include "distortlab/error.hpp"
#include "distortlab/parallel.hpp"
#include "distortlab/pde.hpp"
#include "distortlab/random.hpp"
#include "distortlab/theorems.hpp"

#ifndef DISTORTLAB_VERSION
#define DISTORTLAB_VERSION "0.0.0"
#endif

namespace distortlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "none"; }

double to_double(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::logic_error&) {
        throw InvalidInput(key + ": expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw InvalidInput(key + ": expected a finite number, got '" + s + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::logic_error&) {
        throw InvalidInput(key + ": expected an integer, got '" + s + "'");
    }
    if (used != s.size()) throw InvalidInput(key + ": expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    if (s.empty() || s[0] == '-') throw InvalidInput(key + ": expected a non-negative integer, got '" + s + "'");
    try {
        v = std::stoull(s, &used);
    } catch (const std::logic_error&) {
        throw InvalidInput(key + ": expected a non-negative integer, got '" + s + "'");
    }
    if (used != s.size()) throw InvalidInput(key + ": expected a non-negative integer, got '" + s + "'");
    return v;
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

std::optional<double> to_opt(const std::string& key, const std::string& s) {
    if (s == "none" || s.empty()) return std::nullopt;
    return to_double(key, s);
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw InvalidInput(key + ": " + what);
}

void require_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (v == a) return;
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw InvalidInput(key + ": '" + v + "' is not one of " + list);
}

void require_sorted(const std::string& key, const std::vector<double>& v) {
    require(std::is_sorted(v.begin(), v.end()), key, "values must be sorted ascending");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"dim", [](auto& c, auto& k, auto& v) { c.dim = static_cast<int>(to_int(k, v)); require(c.dim >= 1 && c.dim <= 64, k, "must be in [1, 64]"); }},
        {"map", [](auto& c, auto& k, auto& v) { require_one_of(k, v, {"identity", "rotation", "slow-twist"}); c.map = v; }},
        {"profile", [](auto& c, auto& k, auto& v) { require_one_of(k, v, {"arctan", "log"}); c.profile = v; }},
        {"eps", [](auto& c, auto& k, auto& v) { c.eps = to_double(k, v); require(c.eps >= 0.0, k, "must be >= 0"); }},
        {"clamp", [](auto& c, auto& k, auto& v) { c.clamp = to_double(k, v); require(c.clamp > 0.0, k, "must be > 0"); }},
        {"blocks", [](auto& c, auto&, auto& v) { c.blocks = v; }},
        {"theta_seed", [](auto& c, auto& k, auto& v) { c.theta_seed = to_u64(k, v); }},
        {"rotation_seed", [](auto& c, auto& k, auto& v) { c.rotation_seed = to_u64(k, v); }},
        {"center", [](auto& c, auto& k, auto& v) { c.center = to_list(k, v); }},
        {"radius", [](auto& c, auto& k, auto& v) { c.radius = to_double(k, v); require(c.radius > 0.0, k, "must be > 0"); }},
        {"n_samples", [](auto& c, auto& k, auto& v) { c.n_samples = to_u64(k, v); require(c.n_samples >= 1, k, "must be >= 1"); }},
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
        {"lambdas", [](auto& c, auto& k, auto& v) {
             c.lambdas = to_list(k, v);
             require(!c.lambdas.empty(), k, "must not be empty");
             require(*std::min_element(c.lambdas.begin(), c.lambdas.end()) >= 1.0, k, "values must be >= 1");
             require_sorted(k, c.lambdas);
         }},
        {"calibration_c", [](auto& c, auto& k, auto& v) { c.calibration_c = to_opt(k, v); require(!c.calibration_c || *c.calibration_c > 0.0, k, "must be > 0"); }},
        {"eps_grid", [](auto& c, auto& k, auto& v) {
             c.eps_grid = to_list(k, v);
             require(c.eps_grid.size() >= 2, k, "needs at least two values");
             require(*std::min_element(c.eps_grid.begin(), c.eps_grid.end()) > 0.0, k, "values must be > 0");
             require_sorted(k, c.eps_grid);
         }},
        {"max_ratio", [](auto& c, auto& k, auto& v) { c.max_ratio = to_opt(k, v); }},
        {"format", [](auto& c, auto& k, auto& v) { require_one_of(k, v, {"csv", "json"}); c.format = v; }},
        {"output", [](auto& c, auto& k, auto& v) { require(!v.empty(), k, "must not be empty"); c.output = v; }},
        {"threads", [](auto& c, auto& k, auto& v) { c.threads = static_cast<unsigned>(to_u64(k, v)); }},
        {"field", [](auto& c, auto& k, auto& v) { require_one_of(k, v, {"log-radius", "coordinate"}); c.field = v; }},
        {"pde_field", [](auto& c, auto& k, auto& v) { require_one_of(k, v, {"antisymmetric", "linear", "trig"}); c.pde_field = v; }},
        {"grid_points", [](auto& c, auto& k, auto& v) { c.grid_points = static_cast<int>(to_int(k, v)); require(c.grid_points == 0 || c.grid_points >= 9, k, "must be 0 (default) or >= 9"); }},
        {"grid_half_width", [](auto& c, auto& k, auto& v) { c.grid_half_width = to_double(k, v); require(c.grid_half_width >= 4.0, k, "must be >= 4"); }},
        {"trig_degree", [](auto& c, auto& k, auto& v) { c.trig_degree = static_cast<int>(to_int(k, v)); require(c.trig_degree >= 1, k, "must be >= 1"); }},
        {"c_emp", [](auto& c, auto& k, auto& v) { c.c_emp = to_opt(k, v); }},
        {"grid_file", [](auto& c, auto&, auto& v) { c.grid_file = v; }},
        {"grid_export", [](auto& c, auto&, auto& v) { c.grid_export = v; }},
        {"source", [](auto& c, auto&, auto& v) { c.source = v; }},
        {"target", [](auto& c, auto&, auto& v) { c.target = v; }},
        {"require_proper", [](auto& c, auto& k, auto& v) { require_one_of(k, v, {"auto", "true", "false"}); c.require_proper = v; }},
        {"align_tol", [](auto& c, auto& k, auto& v) { c.align_tol = to_double(k, v); require(c.align_tol >= 0.0, k, "must be >= 0"); }},
        {"k", [](auto& c, auto& k, auto& v) { c.k = static_cast<int>(to_int(k, v)); require(c.k >= 2, k, "must be >= 2"); }},
        {"delta_grid", [](auto& c, auto& k, auto& v) {
             c.delta_grid = to_list(k, v);
             require(!c.delta_grid.empty(), k, "must not be empty");
             require(*std::min_element(c.delta_grid.begin(), c.delta_grid.end()) >= 0.0, k, "values must be >= 0");
             require_sorted(k, c.delta_grid);
         }},
        {"trials", [](auto& c, auto& k, auto& v) { c.trials = to_u64(k, v); require(c.trials >= 1, k, "must be >= 1"); }},
    };
    return table;
}

// ---------------------------------------------------------------------------

Ball config_ball(const ExperimentConfig& cfg) {
    Vector c = Vector::Zero(cfg.dim);
    if (!cfg.center.empty()) c = Eigen::Map<const Vector>(cfg.center.data(), cfg.dim);
    return make_ball(c, cfg.radius);
}

int grid_points_for(const ExperimentConfig& cfg) {
    if (cfg.grid_points > 0) return cfg.grid_points;
    if (cfg.dim <= 2) return 33;
    if (cfg.dim == 3) return 17;
    return 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Matrix gaussian_matrix(int dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 7));
    std::normal_distribution<double> normal;
    Matrix m(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) m(i, j) = normal(rng);
    return m;
}

void add_matrix_table(Report& r, const Matrix& m, const std::string& prefix) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.table.columns.push_back(prefix + std::to_string(j));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        r.table.rows.push_back(std::move(row));
    }
}

void add_tail_table(Report& r, const std::vector<TailPoint>& tail, const std::vector<double>& bounds) {
    r.table.columns = {"lambda", "fraction", "bound", "pass"};
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const bool ok = tail[i].fraction <= bounds[i];
        r.table.rows.push_back({tail[i].lambda, tail[i].fraction, bounds[i], ok ? 1.0 : 0.0});
    }
}

double nominal_distortion_bound(const ExperimentConfig& cfg) {
    return cfg.map == "slow-twist" ? cfg.eps : 1e-12;
}

void theorem_scalars(Report& r, const TheoremReport& t) {
    r.scalars = {{"eps_hat", t.eps_hat},          {"mean_dev", t.mean_dev},
                 {"p4_dev", t.p4_dev},            {"max_dev", t.max_dev},
                 {"ratio_linear", t.ratio_linear}, {"ratio_sqrt", t.ratio_sqrt},
                 {"ratio_p4_sqrt", t.ratio_p4_sqrt}, {"n", static_cast<double>(t.n)}};
    const double defect = orthogonality_defect(t.t_b);
    r.checks.push_back({"t_b_orthogonal", defect <= Tolerances::orthogonality, defect, Tolerances::orthogonality});
    r.checks.push_back({"mean_dev_le_p4_dev", t.mean_dev <= t.p4_dev, t.mean_dev - t.p4_dev, 0.0});
}

void run_distortion(Report& r, const ExperimentConfig& cfg) {
    const MapPtr map = build_map(cfg);
    const DistortionReport d = distortion_estimate(*map, config_ball(cfg), cfg.n_samples, cfg.seed);
    r.scalars = {{"eps_hat", d.eps_hat}, {"n", static_cast<double>(d.n_samples)}};
    if (const auto* twist = dynamic_cast<const SlowTwist*>(map.get())) r.scalars.emplace_back("c_bound", twist->c_bound());
    r.table.columns.clear();
    for (int i = 0; i < cfg.dim; ++i) r.table.columns.push_back("worst_x" + std::to_string(i));
    r.table.rows.push_back(std::vector<double>(d.worst_point.data(), d.worst_point.data() + d.worst_point.size()));
    const double bound = nominal_distortion_bound(cfg);
    r.checks.push_back({"eps_hat_le_nominal", d.eps_hat <= bound, d.eps_hat, bound});
}

void run_bmo(Report& r, const ExperimentConfig& cfg, bool refined) {
    const MapPtr map = build_map(cfg);
    const Ball ball = config_ball(cfg);
    const TheoremReport t = refined ? theorem2_check(*map, ball, cfg.n_samples, cfg.seed)
                                    : theorem1_check(*map, ball, cfg.n_samples, cfg.seed);
    theorem_scalars(r, t);
    add_matrix_table(r, t.t_b, "t_b_col");
    if (cfg.max_ratio) {
        const double ratio = refined ? t.ratio_linear : t.ratio_sqrt;
        r.checks.push_back({refined ? "ratio_linear_le_max" : "ratio_sqrt_le_max", ratio <= *cfg.max_ratio, ratio, *cfg.max_ratio});
    }
}

void run_tail(Report& r, const ExperimentConfig& cfg) {
    const MapPtr map = build_map(cfg);
    const TheoremReport t = tail_check(*map, config_ball(cfg), cfg.n_samples, cfg.seed, cfg.lambdas, cfg.calibration_c);
    theorem_scalars(r, t);
    r.scalars.emplace_back("calibration_c", t.calibration_c);
    add_tail_table(r, t.tail, t.tail_bounds);
    r.checks.push_back({"tail_within_exp_bound", t.tail_pass, static_cast<double>(t.tail_pass), 1.0});
}

void run_sharpness(Report& r, const ExperimentConfig& cfg) {
    const SharpnessResult s = sharpness_experiment(cfg.eps, cfg.n_samples, cfg.seed, std::max(cfg.dim, 2), cfg.clamp, cfg.lambdas);
    if (s.degenerate) {
        r.notes.emplace_back("degenerate", "eps = 0 gives the identity map; no tail exponent");
        r.table.columns = {"lambda", "fraction", "bound", "pass"};
        r.checks.push_back({"non_degenerate", false, 0.0, 0.0});
        return;
    }
    theorem_scalars(r, s.report);
    r.scalars.emplace_back("calibration_c", s.report.calibration_c);
    r.scalars.emplace_back("kappa", s.kappa ? *s.kappa : std::nan(""));
    r.scalars.emplace_back("lambdas_used", static_cast<double>(s.lambdas_used));
    add_tail_table(r, s.report.tail, s.report.tail_bounds);
    r.checks.push_back({"tail_within_exp_bound", s.report.tail_pass, static_cast<double>(s.report.tail_pass), 1.0});
    for (const TailPoint& t : s.report.tail) {
        if (t.lambda == 2.0) {
            const double floor = std::exp(-8.0);
            r.checks.push_back({"fraction_at_2_ge_exp_minus_8", t.fraction >= floor, t.fraction, floor});
        }
    }
    r.checks.push_back({"kappa_le_4", s.kappa.has_value() && *s.kappa <= 4.0, s.kappa ? *s.kappa : std::nan(""), 4.0});
}

void run_claims(Report& r, const ExperimentConfig& cfg) {
    const MapPtr map = build_map(cfg);
    const Ball lemma_ball = make_ball(Vector::Zero(cfg.dim), 10.0);
    const DistortionReport d = distortion_estimate(*map, lemma_ball, cfg.n_samples, cfg.seed);
    const ApproximationResult a = approximation_lemma_check(*map, d.eps_hat, cfg.n_samples, cfg.seed);
    const MapPtr normalized = compose_with_motion(map, std::nullopt, a.motion.inverse());
    const ClaimsStats c = jacobian_claims_check(*normalized, config_ball(cfg), cfg.n_samples, cfg.seed);
    r.scalars = {{"eps_hat", d.eps_hat},
                 {"approx_sup_err", a.sup_err},
                 {"approx_ratio", a.ratio},
                 {"diagonal_l1", c.diagonal_l1},
                 {"off_diagonal_l1", c.off_diagonal_l1},
                 {"diagonal_l2", c.diagonal_l2}};
    add_matrix_table(r, a.motion.rotation, "motion_col");
    const bool finite = std::isfinite(c.diagonal_l1) && std::isfinite(c.off_diagonal_l1) && std::isfinite(c.diagonal_l2);
    r.checks.push_back({"claims_finite", finite, static_cast<double>(finite), 1.0});
}

void run_jn(Report& r, const ExperimentConfig& cfg) {
    const Ball ball = config_ball(cfg);
    const Vector center = ball.center;
    ScalarField f;
    if (cfg.field == "log-radius") {
        f = [center](const Vector& x) { return std::log((x - center).norm()); };
    } else {
        f = [center](const Vector& x) { return x(0) - center(0); };
    }
    const BallSample sample = sample_ball(ball, cfg.n_samples, cfg.seed);
    const MatrixField mf = as_matrix_field(f);
    const std::vector<Matrix> values = evaluate_field(mf, sample);
    const Matrix h = sample_mean(values);
    const std::vector<double> devs = deviations(values, h);
    const DeviationMoments m = deviation_moments(devs);
    const double c = cfg.calibration_c ? *cfg.calibration_c : calibrate_tail_constant(devs, m.mean);
    const std::vector<TailPoint> tail = jn_tail(mf, sample, h, cfg.lambdas, m.mean, c);

    r.scalars = {{"h_b", h(0, 0)}, {"bmo_estimate", m.mean}, {"p4_dev", m.p4}, {"max_dev", m.max}, {"calibration_c", c}};
    std::vector<double> bounds;
    bool ok = true;
    for (const TailPoint& t : tail) {
        const double b = std::exp(-t.lambda);
        bounds.push_back(b + 3.0 * binomial_sigma(b, sample.size()));
        ok = ok && t.fraction <= bounds.back();
    }
    add_tail_table(r, tail, bounds);
    r.checks.push_back({"tail_within_exp_bound", ok, static_cast<double>(ok), 1.0});
}

VectorFunction config_field(const ExperimentConfig& cfg) {
    if (cfg.pde_field == "antisymmetric") {
        const Matrix s = antisymmetric_part(gaussian_matrix(cfg.dim, cfg.seed));
        return [s](const Vector& x) -> Vector { return s * x; };
    }
    if (cfg.pde_field == "linear") {
        const Matrix m = gaussian_matrix(cfg.dim, cfg.seed);
        return [m](const Vector& x) -> Vector { return m * x; };
    }
    return random_trig_field(cfg.dim, cfg.trig_degree, cfg.seed);
}

// Constant gradient of the linear test fields; trig fields use differences.
std::optional<JacobianFunction> config_gradient(const ExperimentConfig& cfg) {
    if (cfg.pde_field == "trig") return std::nullopt;
    Matrix g = gaussian_matrix(cfg.dim, cfg.seed);
    if (cfg.pde_field == "antisymmetric") g = antisymmetric_part(g);
    return JacobianFunction([g](const Vector&) -> Matrix { return g; });
}

GridField config_grid(const ExperimentConfig& cfg) {
    if (!cfg.grid_file.empty()) {
        const bool binary = ends_with(cfg.grid_file, ".bin");
        std::ifstream in(cfg.grid_file, binary ? std::ios::binary : std::ios::in);
        if (!in) throw InvalidInput("grid_file: cannot open '" + cfg.grid_file + "'");
        GridField g = binary ? read_grid_binary(in) : read_grid_csv(in);
        if (g.dim() != cfg.dim) throw InvalidInput("grid_file: dimension differs from dim");
        return g;
    }
    return sample_grid_field(cfg.dim, cfg.grid_half_width, grid_points_for(cfg), config_field(cfg));
}

void pde_fit_report(Report& r, const ExperimentConfig& cfg, const AntisymmetricFit& fit) {
    const double asym = (fit.s + fit.s.transpose()).cwiseAbs().maxCoeff();
    r.scalars.insert(r.scalars.begin(), {{"residual", fit.residual},
                                         {"hypothesis_norm", fit.hypothesis_norm},
                                         {"constant", fit.constant}});
    if (fit.exact_kernel) r.notes.emplace_back("exact_kernel", "hypothesis norm vanishes; field is antisymmetric linear");
    add_matrix_table(r, fit.s, "s_col");
    r.checks.push_back({"s_antisymmetric", asym <= Tolerances::antisymmetry, asym, Tolerances::antisymmetry});
    if (cfg.c_emp) r.checks.push_back({"constant_le_c_emp", fit.constant <= *cfg.c_emp, fit.constant, *cfg.c_emp});
}

void run_pde(Report& r, const ExperimentConfig& cfg) {
    if (cfg.grid_file.empty() && grid_points_for(cfg) == 0) {
        if (!cfg.grid_export.empty()) throw InvalidInput("grid_export: needs a grid; set grid_points");
        const AntisymmetricFit fit = antisymmetric_approximation_sampled(cfg.dim, config_field(cfg), cfg.n_samples,
                                                                     cfg.seed, config_gradient(cfg));
        r.notes.emplace_back("method", "monte-carlo");
        r.scalars.emplace_back("n", static_cast<double>(cfg.n_samples));
        pde_fit_report(r, cfg, fit);
        return;
    }
    const GridField grid = config_grid(cfg);
    if (!cfg.grid_export.empty()) {
        const bool binary = ends_with(cfg.grid_export, ".bin");
        std::ofstream out(cfg.grid_export, binary ? std::ios::binary : std::ios::out);
        if (!out) throw InvalidInput("grid_export: cannot write '" + cfg.grid_export + "'");
        binary ? write_grid_binary(grid, out) : write_grid_csv(grid, out);
    }
    r.notes.emplace_back("method", "grid");
    r.scalars = {{"grid_spacing", grid.spacing()}, {"grid_points", static_cast<double>(grid.points())}};
    if (grid.points() >= 9) r.scalars.emplace_back("identity_residual", third_derivative_identity_check(grid));
    pde_fit_report(r, cfg, antisymmetric_approximation(grid));
}

LabeledPointSet read_points(const std::string& path, const char* key) {
    std::ifstream in(path);
    if (!in) throw InvalidInput(std::string(key) + ": cannot open '" + path + "'");
    try {
        return read_point_set_csv(in);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

void run_align(Report& r, const ExperimentConfig& cfg) {
    if (cfg.source.empty() != cfg.target.empty()) throw InvalidInput("align: set both source and target, or neither");
    if (!cfg.source.empty()) {
        const LabeledPointSet y = read_points(cfg.source, "source");
        const LabeledPointSet z = read_points(cfg.target, "target");
        if (y.dim() != z.dim() || y.size() != z.size()) throw InvalidInput("align: source and target differ in shape");
        const bool proper = cfg.require_proper == "auto" ? static_cast<int>(y.size()) <= y.dim()
                                                         : cfg.require_proper == "true";
        const AlignmentResult a = procrustes_align(y, z, proper);
        const double det = a.motion.rotation.determinant();
        r.scalars = {{"max_rel_err", a.max_rel_err}, {"rms_err", a.rms_err}, {"delta_in", a.delta_in},
                     {"det", det}, {"k", static_cast<double>(y.size())}};
        if (a.warning) r.notes.emplace_back("warning", *a.warning);
        r.notes.emplace_back("proper_requested", proper ? "true" : "false");
        for (int j = 0; j < y.dim(); ++j) r.table.columns.push_back("rotation_col" + std::to_string(j));
        r.table.columns.push_back("translation");
        for (int i = 0; i < y.dim(); ++i) {
            std::vector<double> row;
            for (int j = 0; j < y.dim(); ++j) row.push_back(a.motion.rotation(i, j));
            row.push_back(a.motion.translation(i));
            r.table.rows.push_back(std::move(row));
        }
        r.checks.push_back({"max_rel_err_le_tol", a.max_rel_err <= cfg.align_tol, a.max_rel_err, cfg.align_tol});
        if (proper) r.checks.push_back({"proper_motion", det > 0.0, det, 1.0});
        return;
    }

    const auto rows = delta_to_eps_sweep(cfg.k, cfg.dim, cfg.delta_grid, cfg.trials, cfg.seed);
    r.table.columns = {"delta", "mean_max_rel_err", "max_max_rel_err"};
    std::vector<double> deltas;
    std::vector<double> means;
    for (const DeltaSweepRow& row : rows) {
        r.table.rows.push_back({row.delta, row.mean_max_rel_err, row.max_max_rel_err});
        deltas.push_back(row.delta);
        means.push_back(row.mean_max_rel_err);
    }
    if (rows.size() >= 3) {
        const double rho = spearman_correlation(deltas, means);
        r.scalars.emplace_back("spearman", rho);
        r.checks.push_back({"spearman_ge_0.9", rho >= 0.9, rho, 0.9});
    }
    if (rows.front().delta == 0.0) {
        r.checks.push_back({"congruent_recovery", rows.front().max_max_rel_err <= 1e-10, rows.front().max_max_rel_err, 1e-10});
    }
}

void run_sweep(Report& r, const ExperimentConfig& cfg) {
    if (cfg.map != "slow-twist") throw InvalidInput("sweep: map must be slow-twist");
    const MapFamily family = [cfg](double eps) {
        ExperimentConfig c = cfg;
        c.eps = eps;
        return build_map(c);
    };
    const SweepResult s = eps_sweep(family, cfg.eps_grid, config_ball(cfg), cfg.n_samples, cfg.seed);
    r.scalars = {{"fitted_slope", s.fitted_slope}, {"fitted_constant", s.fitted_constant}, {"ratio_spread", s.ratio_spread}};
    r.table.columns = {"eps", "eps_hat", "mean_dev", "p4_dev", "ratio_linear", "fitted_slope", "fitted_constant"};
    for (std::size_t i = 0; i < s.eps_grid.size(); ++i) {
        const double ratio = s.eps_hats[i] > 0.0 ? s.mean_devs[i] / s.eps_hats[i] : std::nan("");
        r.table.rows.push_back({s.eps_grid[i], s.eps_hats[i], s.mean_devs[i], s.p4_devs[i], ratio, s.fitted_slope, s.fitted_constant});
    }
    r.checks.push_back({"slope_within_0.15_of_1", std::abs(s.fitted_slope - 1.0) <= 0.15,
                        std::abs(s.fitted_slope - 1.0), 0.15});
    r.checks.push_back({"ratio_spread_le_2", s.ratio_spread <= 2.0, s.ratio_spread, 2.0});
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, setter] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const std::string k = trim(key);
    for (const auto& [name, setter] : setters()) {
        if (name == k) {
            setter(cfg, k, trim(value));
            return;
        }
    }
    throw InvalidInput(k + ": unknown key");
}

void load_config(ExperimentConfig& cfg, std::istream& in, const std::string& source_name) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string::npos) throw InvalidInput(where + "expected 'key = value'");
        try {
            apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const InvalidInput& e) {
            throw InvalidInput(where + e.what());
        }
    }
}

void validate(const ExperimentConfig& cfg) {
    if (!cfg.center.empty() && static_cast<int>(cfg.center.size()) != cfg.dim) {
        throw InvalidInput("center: has " + std::to_string(cfg.center.size()) + " coordinates, dim is " + std::to_string(cfg.dim));
    }
    if (cfg.pde_field.empty()) throw InvalidInput("pde_field: must not be empty");
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& c) {
    // output and threads do not affect results and are left out, so reports
    // written to different paths or with different worker counts compare equal.
    return {
        {"dim", std::to_string(c.dim)},
        {"map", c.map},
        {"profile", c.profile},
        {"eps", fmt(c.eps)},
        {"clamp", fmt(c.clamp)},
        {"blocks", c.blocks},
        {"theta_seed", std::to_string(c.theta_seed)},
        {"rotation_seed", std::to_string(c.rotation_seed)},
        {"center", fmt_list(c.center)},
        {"radius", fmt(c.radius)},
        {"n_samples", std::to_string(c.n_samples)},
        {"seed", std::to_string(c.seed)},
        {"lambdas", fmt_list(c.lambdas)},
        {"calibration_c", fmt_opt(c.calibration_c)},
        {"eps_grid", fmt_list(c.eps_grid)},
        {"max_ratio", fmt_opt(c.max_ratio)},
        {"format", c.format},
        {"field", c.field},
        {"pde_field", c.pde_field},
        {"grid_points", std::to_string(c.grid_points)},
        {"grid_half_width", fmt(c.grid_half_width)},
        {"trig_degree", std::to_string(c.trig_degree)},
        {"c_emp", fmt_opt(c.c_emp)},
        {"grid_file", c.grid_file},
        {"grid_export", c.grid_export},
        {"source", c.source},
        {"target", c.target},
        {"require_proper", c.require_proper},
        {"align_tol", fmt(c.align_tol)},
        {"k", std::to_string(c.k)},
        {"delta_grid", fmt_list(c.delta_grid)},
        {"trials", std::to_string(c.trials)},
    };
}

MapPtr build_map(const ExperimentConfig& cfg) {
    if (cfg.map == "identity") return make_identity_map(cfg.dim);
    if (cfg.map == "rotation") {
        return make_affine_map(random_rotation(cfg.dim, cfg.rotation_seed), Vector::Zero(cfg.dim));
    }
    const AngleProfile profile = cfg.profile == "log" ? log_profile(cfg.eps / 2.0, cfg.clamp) : arctan_profile(cfg.eps);
    const Matrix theta = cfg.theta_seed == 0 ? Matrix::Identity(cfg.dim, cfg.dim) : random_rotation(cfg.dim, cfg.theta_seed);
    if (cfg.blocks.empty()) return make_slow_twist(cfg.dim, profile, theta);

    std::vector<TwistBlock> blocks;
    std::istringstream in(cfg.blocks);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item == "R") {
            blocks.push_back({TwistBlock::Kind::Rotation2, profile});
        } else if (item == "I") {
            blocks.push_back({TwistBlock::Kind::Identity1, {}});
        } else {
            throw InvalidInput("blocks: expected comma-separated R or I, got '" + item + "'");
        }
    }
    int total = 0;
    for (const TwistBlock& b : blocks) total += b.size();
    if (total != cfg.dim) throw InvalidInput("blocks: layout covers " + std::to_string(total) + " coordinates, dim is " + std::to_string(cfg.dim));
    return make_slow_twist(std::move(blocks), theta);
}

Report run_subcommand(const std::string& name, const ExperimentConfig& cfg) {
    validate(cfg);
    const auto start = std::chrono::steady_clock::now();
    const unsigned previous_threads = thread_count();
    set_thread_count(cfg.threads);

    Report r;
    r.subcommand = name;
    r.version = DISTORTLAB_VERSION;
    r.config = config_echo(cfg);
    try {
        if (name == "distortion") {
            run_distortion(r, cfg);
        } else if (name == "bmo1") {
            run_bmo(r, cfg, false);
        } else if (name == "bmo2") {
            run_bmo(r, cfg, true);
        } else if (name == "tail") {
            run_tail(r, cfg);
        } else if (name == "sharpness") {
            run_sharpness(r, cfg);
        } else if (name == "claims") {
            run_claims(r, cfg);
        } else if (name == "jn") {
            run_jn(r, cfg);
        } else if (name == "pde") {
            run_pde(r, cfg);
        } else if (name == "align") {
            run_align(r, cfg);
        } else if (name == "sweep") {
            run_sweep(r, cfg);
        } else {
            throw InvalidInput("unknown subcommand '" + name + "'");
        }
    } catch (...) {
        set_thread_count(previous_threads);
        throw;
    }
    set_thread_count(previous_threads);
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

int exit_code(const Report& report) { return report.passed() ? 0 : 2; }

}  // namespace distortlab
