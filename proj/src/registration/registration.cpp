#include "pave3d/registration/registration.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace pave3d::registration {

namespace {

/// Twice the signed triangle area of (a, b, c).
double triangle_area2(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c) {
    const Eigen::Vector2d u = b - a;
    const Eigen::Vector2d v = c - a;
    return u.x() * v.y() - u.y() * v.x();
}

/// True when any 3 of the points span less than `area_tol` triangle area.
bool any_triple_collinear(const std::vector<Eigen::Vector2d>& pts, double area_tol) {
    const size_t n = pts.size();
    for (size_t i = 0; i + 2 < n; ++i)
        for (size_t j = i + 1; j + 1 < n; ++j)
            for (size_t k = j + 1; k < n; ++k)
                if (std::abs(triangle_area2(pts[i], pts[j], pts[k])) / 2.0 <= area_tol)
                    return true;
    return false;
}

/// Hartley isotropic normalization: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= double(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - centroid).norm();
    mean_dist /= double(pts.size());
    if (mean_dist < 1e-12)
        throw DegenerateConfiguration("all points coincide; no transform is determined");
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = s;
    t(1, 1) = s;
    t(0, 2) = -s * centroid.x();
    t(1, 2) = -s * centroid.y();
    return t;
}

Eigen::Vector2d apply_mat(const Eigen::Matrix3d& m, const Eigen::Vector2d& p, bool& ok) {
    const Eigen::Vector3d q = m * Eigen::Vector3d(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) < 1e-12) {
        ok = false;
        return Eigen::Vector2d::Zero();
    }
    ok = true;
    return {q.x() / q.z(), q.y() / q.z()};
}

double residual_sq(const Homography& h, const Homography& h_inv, const PointPair& pair,
                   const MsacConfig& cfg) {
    bool ok = false;
    const Eigen::Vector2d fwd = apply_mat(h.m, pair.source, ok);
    if (!ok) return std::numeric_limits<double>::infinity();
    double r2 = (fwd - pair.target).squaredNorm();
    if (cfg.symmetric_residual) {
        const Eigen::Vector2d back = apply_mat(h_inv.m, pair.target, ok);
        if (!ok) return std::numeric_limits<double>::infinity();
        r2 = 0.5 * (r2 + (back - pair.source).squaredNorm());
    }
    return r2;
}

/// Minimal or least-squares fit for the configured family.
Homography fit_family(const std::vector<PointPair>& pairs, TransformFamily family) {
    return family == TransformFamily::projective ? estimate_homography_dlt(pairs)
                                                 : estimate_similarity_ls(pairs);
}

size_t min_sample_size(TransformFamily family) {
    return family == TransformFamily::projective ? 4 : 2;
}

}  // namespace

Homography Homography::translation(double tx, double ty) {
    Homography h;
    h.m(0, 2) = tx;
    h.m(1, 2) = ty;
    return h;
}

void Homography::canonicalize() {
    const double fro = m.norm();
    if (!(fro > 0.0) || !m.allFinite())
        throw DegenerateConfiguration("homography has no finite scale");
    if (std::abs(m(2, 2)) > 1e-9 * fro) {
        m /= m(2, 2);
    } else {
        m /= fro;
        // Fix the overall sign deterministically: largest |entry| positive.
        Eigen::Index r = 0, c = 0;
        m.cwiseAbs().maxCoeff(&r, &c);
        if (m(r, c) < 0.0) m = -m;
    }
    if (std::abs(m.determinant()) <= 1e-12)
        throw DegenerateConfiguration("homography is singular after canonicalization");
}

Homography Homography::inverse() const {
    Homography h;
    h.m = m.inverse();
    h.canonicalize();
    return h;
}

Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& p) {
    bool ok = false;
    const Eigen::Vector2d q = apply_mat(h.m, p, ok);
    if (!ok)
        throw PointAtInfinity("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                              ") maps to infinity");
    return q;
}

void MsacConfig::validate() const {
    if (!(threshold > 0.0)) throw ValidationError("inlier threshold must be positive");
    if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
    if (!(confidence > 0.0) || !(confidence < 1.0))
        throw ValidationError("confidence must lie in (0, 1)");
}

Homography estimate_homography_dlt(const std::vector<PointPair>& pairs) {
    const size_t n = pairs.size();
    if (n < 4)
        throw TooFewPairs("homography needs at least 4 pairs, got " + std::to_string(n));

    std::vector<Eigen::Vector2d> src(n), dst(n);
    for (size_t i = 0; i < n; ++i) {
        src[i] = pairs[i].source;
        dst[i] = pairs[i].target;
    }
    // A minimal set loses its unique solution as soon as 3 points align;
    // larger sets are guarded by the rank test below, which stays
    // affordable when counting triples would not be.
    if (n == 4 &&
        (any_triple_collinear(src, 1e-9) || any_triple_collinear(dst, 1e-9)))
        throw DegenerateConfiguration("3 of the 4 sampled points are collinear");

    const Eigen::Matrix3d t_src = normalizing_transform(src);
    const Eigen::Matrix3d t_dst = normalizing_transform(dst);

    Eigen::MatrixXd a(2 * n, 9);
    for (size_t i = 0; i < n; ++i) {
        bool ok = false;
        const Eigen::Vector2d p = apply_mat(t_src, src[i], ok);
        const Eigen::Vector2d q = apply_mat(t_dst, dst[i], ok);
        const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
        a.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
        a.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sing = svd.singularValues();
    // The system must determine the solution up to exactly one null
    // direction: the second-smallest singular value must stay well above
    // the numerical floor relative to the largest.
    const Eigen::Index k = sing.size();
    if (k < 8 || sing(k - 2) < 1e-10 * sing(0))
        throw DegenerateConfiguration("point configuration leaves the transform underdetermined");

    const Eigen::VectorXd hvec = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);

    Homography h;
    h.m = t_dst.inverse() * hn * t_src;
    h.canonicalize();
    return h;
}

Homography estimate_similarity_ls(const std::vector<PointPair>& pairs) {
    const size_t n = pairs.size();
    if (n < 2)
        throw TooFewPairs("similarity needs at least 2 pairs, got " + std::to_string(n));

    // Complex-number least squares: target ~ a * source + b with
    // a = s * exp(i*theta). Normal equations in (a, b):
    //   [ S|p|^2  S p̄ ] [a]   [ S p̄ q ]
    //   [ S p     n   ] [b] = [ S q    ]
    std::complex<double> sum_p(0, 0), sum_q(0, 0), sum_pq(0, 0);
    double sum_pp = 0.0;
    for (const auto& pr : pairs) {
        const std::complex<double> p(pr.source.x(), pr.source.y());
        const std::complex<double> q(pr.target.x(), pr.target.y());
        sum_p += p;
        sum_q += q;
        sum_pq += std::conj(p) * q;
        sum_pp += std::norm(p);
    }
    const double dn = double(n);
    const double denom = sum_pp - std::norm(sum_p) / dn;
    if (denom <= 1e-12)
        throw DegenerateConfiguration("source points coincide; similarity is underdetermined");
    const std::complex<double> a = (sum_pq - std::conj(sum_p) * sum_q / dn) / denom;
    const std::complex<double> b = (sum_q - a * sum_p) / dn;
    if (std::abs(a) < 1e-12)
        throw DegenerateConfiguration("similarity collapses to a point");

    Homography h;
    h.m << a.real(), -a.imag(), b.real(), a.imag(), a.real(), b.imag(), 0.0, 0.0, 1.0;
    h.canonicalize();
    return h;
}

double msac_score(const Homography& h, const std::vector<PointPair>& pairs,
                  const MsacConfig& cfg) {
    cfg.validate();
    const double t2 = cfg.threshold * cfg.threshold;
    Homography h_inv;
    if (cfg.symmetric_residual) h_inv = h.inverse();
    double score = 0.0;
    for (const auto& pair : pairs) score += std::min(residual_sq(h, h_inv, pair, cfg), t2);
    return score;
}

EstimateResult msac_homography(const std::vector<PointPair>& pairs, const MsacConfig& cfg) {
    cfg.validate();
    const size_t n = pairs.size();
    const size_t k = min_sample_size(cfg.family);
    if (n < k)
        throw TooFewPairs("robust estimation needs at least " + std::to_string(k) +
                          " pairs, got " + std::to_string(n));

    const double t2 = cfg.threshold * cfg.threshold;
    std::mt19937_64 eng(cfg.seed);
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    EstimateResult best;
    best.score = std::numeric_limits<double>::infinity();
    bool found = false;
    double iter_bound = double(cfg.max_iterations);

    auto residuals_of = [&](const Homography& model) {
        Homography inv;
        if (cfg.symmetric_residual) inv = model.inverse();
        std::vector<double> r2(n);
        for (size_t i = 0; i < n; ++i) r2[i] = residual_sq(model, inv, pairs[i], cfg);
        return r2;
    };

    int iter = 0;
    for (; iter < cfg.max_iterations && double(iter) < iter_bound; ++iter) {
        // Partial Fisher-Yates draw of k distinct indices; the engine is
        // consumed identically on every run with the same seed.
        for (size_t j = 0; j < k; ++j) {
            const size_t pick = j + size_t(eng() % std::uint64_t(n - j));
            std::swap(idx[j], idx[pick]);
        }
        std::vector<PointPair> sample(k);
        std::vector<Eigen::Vector2d> s_src(k), s_dst(k);
        for (size_t j = 0; j < k; ++j) {
            sample[j] = pairs[idx[j]];
            s_src[j] = sample[j].source;
            s_dst[j] = sample[j].target;
        }
        if (cfg.family == TransformFamily::projective) {
            if (any_triple_collinear(s_src, 1e-9) || any_triple_collinear(s_dst, 1e-9)) continue;
        } else {
            if ((s_src[0] - s_src[1]).norm() < 1e-12) continue;
        }

        Homography model;
        try {
            model = fit_family(sample, cfg.family);
        } catch (const DegenerateConfiguration&) {
            continue;
        }

        const auto r2 = residuals_of(model);
        double score = 0.0;
        size_t inlier_count = 0;
        for (double r : r2) {
            score += std::min(r, t2);
            if (r < t2) ++inlier_count;
        }

        if (score < best.score) {
            best.model = model;
            best.score = score;
            best.score_trace.push_back(score);
            found = true;

            const double w = double(inlier_count) / double(n);
            const double denom = std::log1p(-std::min(std::pow(w, double(k)), 1.0 - 1e-15));
            if (denom < 0.0) {
                const double needed = std::log(1.0 - cfg.confidence) / denom;
                iter_bound = std::min(iter_bound, std::max(needed, double(iter + 1)));
            }
        }
    }
    best.iterations_run = iter;
    if (!found) throw NoValidModel("no non-degenerate sample produced a model");

    auto inliers_under = [&](const Homography& model) {
        const auto r2 = residuals_of(model);
        std::vector<int> inl;
        for (size_t i = 0; i < n; ++i)
            if (r2[i] < t2) inl.push_back(int(i));
        return inl;
    };
    auto rms_on = [&](const Homography& model, const std::vector<int>& set) {
        Homography inv;
        if (cfg.symmetric_residual) inv = model.inverse();
        double sum = 0.0;
        for (int i : set) sum += residual_sq(model, inv, pairs[size_t(i)], cfg);
        return set.empty() ? 0.0 : std::sqrt(sum / double(set.size()));
    };

    std::vector<int> inl = inliers_under(best.model);
    if (inl.size() >= k) {
        std::vector<PointPair> support;
        support.reserve(inl.size());
        for (int i : inl) support.push_back(pairs[size_t(i)]);
        try {
            const Homography refit = fit_family(support, cfg.family);
            const double refit_score = msac_score(refit, pairs, cfg);
            // Adopt the refit only when it degrades neither invariant:
            // the RMS on the sampled model's inlier set, nor the robust score.
            if (rms_on(refit, inl) <= rms_on(best.model, inl) && refit_score <= best.score) {
                best.model = refit;
                best.score = refit_score;
                inl = inliers_under(refit);
            }
        } catch (const DegenerateConfiguration&) {
            // Keep the sampled model.
        }
    }

    best.inlier_indices = std::move(inl);
    best.score = msac_score(best.model, pairs, cfg);
    return best;
}

}  // namespace pave3d::registration
