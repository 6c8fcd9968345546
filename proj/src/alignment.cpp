#include "distortlab/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "distortlab/error.hpp"
#include "distortlab/parallel.hpp"
#include "distortlab/random.hpp"

namespace distortlab {

namespace {

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q) r[order[q]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

LabeledPointSet make_point_set(Matrix points) {
    if (points.rows() < 1) throw InvalidInput("point set: dimension must be >= 1");
    if (points.cols() < 2) throw InvalidInput("point set: need at least 2 points");
    require_finite(points, "point set");
    return LabeledPointSet{std::move(points)};
}

double diameter(const LabeledPointSet& e) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < e.points.cols(); ++i)
        for (Eigen::Index j = i + 1; j < e.points.cols(); ++j)
            d = std::max(d, (e.points.col(i) - e.points.col(j)).norm());
    return d;
}

double pairwise_distortion(const LabeledPointSet& source, const LabeledPointSet& target) {
    if (source.size() != target.size() || source.dim() != target.dim()) {
        throw InvalidInput("pairwise_distortion: point sets differ in shape");
    }
    if (source.size() < 2) throw InvalidInput("pairwise_distortion: need at least 2 points");
    double delta = 0.0;
    for (Eigen::Index i = 0; i < source.points.cols(); ++i) {
        for (Eigen::Index j = i + 1; j < source.points.cols(); ++j) {
            const double dy = (source.points.col(i) - source.points.col(j)).norm();
            if (dy == 0.0) {
                throw DegenerateInput("pairwise_distortion: source points " + std::to_string(i) +
                                          " and " + std::to_string(j) + " coincide",
                                      0.0);
            }
            const double r = (target.points.col(i) - target.points.col(j)).norm() / dy;
            const double worst = r > 0.0 ? std::max(r, 1.0 / r) : std::numeric_limits<double>::infinity();
            delta = std::max(delta, worst - 1.0);
        }
    }
    return delta;
}

AlignmentResult procrustes_align(const LabeledPointSet& source, const LabeledPointSet& target,
                                 bool require_proper) {
    if (source.size() < 2) throw InvalidInput("procrustes_align: need at least 2 points");
    if (source.size() != target.size() || source.dim() != target.dim()) {
        throw InvalidInput("procrustes_align: point sets differ in shape");
    }
    const ProcrustesFit fit = procrustes_motion(
        source.points, target.points, require_proper ? OrthogonalClass::Proper : OrthogonalClass::Any);

    AlignmentResult out;
    out.motion = fit.motion;
    out.proper_requested = require_proper;
    out.delta_in = pairwise_distortion(source, target);

    const Matrix mapped = (fit.motion.rotation * source.points).colwise() + fit.motion.translation;
    const Vector errs = (target.points - mapped).colwise().norm();
    const double diam = diameter(source);
    out.max_rel_err = errs.maxCoeff() / diam;
    out.rms_err = std::sqrt(errs.squaredNorm() / static_cast<double>(source.size()));

    const Vector& sv = fit.covariance_singular_values;
    const bool rank_deficient = !(sv(sv.size() - 1) > Tolerances::rank_cutoff * std::max(1.0, sv(0)));
    if (require_proper && rank_deficient && static_cast<int>(source.size()) > source.dim()) {
        out.warning = "cross-covariance is rank-deficient; the optimal proper motion is not unique";
    }
    return out;
}

LabeledPointSet random_configuration(int k, int dim, std::uint64_t seed, double min_separation) {
    if (k < 2 || dim < 1) throw InvalidInput("random_configuration: need k >= 2 and dim >= 1");
    Rng rng(derive_seed(seed, 0));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Matrix pts(dim, k);
    for (int i = 0; i < k; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000) throw DegenerateInput("random_configuration: separation unattainable", min_separation);
            for (int c = 0; c < dim; ++c) pts(c, i) = uniform(rng);
            bool ok = true;
            for (int j = 0; j < i && ok; ++j) ok = (pts.col(i) - pts.col(j)).norm() >= min_separation;
            if (ok) break;
        }
    }
    return LabeledPointSet{std::move(pts)};
}

std::vector<DeltaSweepRow> delta_to_eps_sweep(int k, int dim, std::span<const double> delta_grid,
                                              std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidInput("delta_to_eps_sweep: trials must be >= 1");
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
        if (!(delta_grid[i] >= 0.0)) throw InvalidInput("delta_to_eps_sweep: delta must be >= 0");
        if (i > 0 && delta_grid[i] < delta_grid[i - 1]) throw InvalidInput("delta_to_eps_sweep: delta grid not sorted");
    }
    const bool proper = k <= dim;

    std::vector<DeltaSweepRow> rows;
    for (std::size_t row = 0; row < delta_grid.size(); ++row) {
        const double delta = delta_grid[row];
        std::vector<double> errs(trials);
        parallel_for(trials, [&](std::size_t t) {
            const std::uint64_t trial_seed = derive_seed(seed, row * trials + t);
            const LabeledPointSet y = random_configuration(k, dim, trial_seed);
            Rng rng(derive_seed(trial_seed, 1));
            std::normal_distribution<double> normal;
            Matrix direction(dim, k);
            for (int c = 0; c < k; ++c)
                for (int r = 0; r < dim; ++r) direction(r, c) = normal(rng);

            Matrix z = y.points;
            if (delta > 0.0) {
                auto distortion_at = [&](double eta) {
                    return pairwise_distortion(y, LabeledPointSet{y.points + eta * direction});
                };
                double lo = 0.0;
                double hi = 1e-6;
                while (distortion_at(hi) < delta) {
                    lo = hi;
                    hi *= 2.0;
                }
                for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (distortion_at(mid) < delta ? lo : hi) = mid;
                }
                z = y.points + hi * direction;
            }

            Matrix rot = random_rotation(dim, derive_seed(trial_seed, 2));
            if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) rot.row(0) *= -1.0;
            Vector shift(dim);
            for (int r = 0; r < dim; ++r) shift(r) = normal(rng);
            const LabeledPointSet target{(rot * z).colwise() + shift};
            errs[t] = procrustes_align(y, target, proper).max_rel_err;
        });
        DeltaSweepRow out{delta, 0.0, 0.0};
        for (double e : errs) {
            out.mean_max_rel_err += e;
            out.max_max_rel_err = std::max(out.max_max_rel_err, e);
        }
        out.mean_max_rel_err /= static_cast<double>(trials);
        rows.push_back(out);
    }
    return rows;
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidInput("spearman_correlation: need two equal-length series");
    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

void write_point_set_csv(const LabeledPointSet& e, std::ostream& out) {
    out << "dim=" << e.dim() << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < e.points.cols(); ++i) {
        for (Eigen::Index c = 0; c < e.points.rows(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", e.points(c, i));
            out << buf << (c + 1 < e.points.rows() ? ',' : '\n');
        }
    }
}

LabeledPointSet read_point_set_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("point csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("dim=", 0) != 0) throw InvalidInput("point csv line 1: expected header 'dim=D'");
    int dim = 0;
    try {
        dim = std::stoi(line.substr(4));
    } catch (const std::logic_error&) {
        throw InvalidInput("point csv line 1: bad dimension");
    }
    if (dim < 1) throw InvalidInput("point csv line 1: dimension must be >= 1");

    std::vector<double> flat;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        int count = 0;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                flat.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::logic_error&) {
                throw InvalidInput("point csv line " + std::to_string(line_no) + ": unparsable value '" + cell + "'");
            }
            ++count;
        }
        if (count != dim) {
            throw InvalidInput("point csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " values, got " + std::to_string(count));
        }
    }
    const auto k = static_cast<Eigen::Index>(flat.size() / static_cast<std::size_t>(dim));
    Matrix pts = Eigen::Map<const Matrix>(flat.data(), dim, k);
    return make_point_set(std::move(pts));
}

}  // namespace distortlab
