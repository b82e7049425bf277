#pragma once

// Baseline regressors: OLS, Ridge, Elastic Net, Bagging(OLS), AdaBoost.R2(stumps).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace slicekpi {

struct LinearModel {
    Vector weights;
    double intercept = 0.0;
    std::string regularization = "none";
    bool singular = false;  // normal equations needed the 1e-8 ridge fallback
};

struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;  // x[feature] <= threshold goes left
    double left = 0.0;
    double right = 0.0;

    double operator()(std::span<const double> x) const noexcept {
        return x[feature] <= threshold ? left : right;
    }
};

struct EnsembleModel {
    enum class Aggregation { Mean, WeightedMedian };
    Aggregation aggregation = Aggregation::Mean;
    std::vector<LinearModel> members;  // Mean
    std::vector<Stump> stumps;         // WeightedMedian
    Vector stage_weights;
    Vector round_losses;
    std::size_t input_dim = 0;
};

inline double predict(const LinearModel& m, std::span<const double> x) {
    if (x.size() != m.weights.size())
        throw DataError("predict: input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(m.weights.size()));
    return m.intercept + dot(m.weights, x);
}

inline double predict(const EnsembleModel& e, std::span<const double> x) {
    if (x.size() != e.input_dim)
        throw DataError("predict: input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(e.input_dim));
    if (e.aggregation == EnsembleModel::Aggregation::Mean) {
        double s = 0.0;
        for (const auto& m : e.members) s += predict(m, x);
        return s / static_cast<double>(e.members.size());
    }
    std::vector<std::pair<double, double>> pw;  // (prediction, weight)
    pw.reserve(e.stumps.size());
    for (std::size_t i = 0; i < e.stumps.size(); ++i) pw.emplace_back(e.stumps[i](x), e.stage_weights[i]);
    std::sort(pw.begin(), pw.end());
    const double total = std::accumulate(e.stage_weights.begin(), e.stage_weights.end(), 0.0);
    double cum = 0.0;
    for (const auto& [p, w] : pw) {
        cum += w;
        if (cum >= 0.5 * total) return p;
    }
    return pw.back().first;
}

using Regressor = std::variant<LinearModel, EnsembleModel>;

inline double predict(const Regressor& r, std::span<const double> x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, r);
}

namespace detail {

inline void check_xy(const Matrix& X, std::span<const double> y) {
    if (X.rows() == 0) throw DataError("regression needs at least one sample");
    if (X.rows() != y.size())
        throw DataError("regression: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) +
                        " targets");
}

/// Penalized least squares on centered data; the intercept is not penalized.
inline LinearModel centered_solve(const Matrix& X, std::span<const double> y, double lambda) {
    const std::size_t n = X.rows(), m = X.cols();
    Vector xm(m, 0.0);
    double ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) xm[j] += X(i, j);
        ym += y[i];
    }
    for (auto& v : xm) v /= static_cast<double>(n);
    ym /= static_cast<double>(n);

    Matrix G(m, m);
    Vector q(m, 0.0), xc(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) xc[j] = X(i, j) - xm[j];
        const double yc = y[i] - ym;
        for (std::size_t j = 0; j < m; ++j) {
            q[j] += xc[j] * yc;
            for (std::size_t k = 0; k <= j; ++k) G(j, k) += xc[j] * xc[k];
        }
    }
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < j; ++k) G(k, j) = G(j, k);

    LinearModel out;
    auto A = G;
    for (std::size_t j = 0; j < m; ++j) A(j, j) += lambda;
    auto w = cholesky_solve(A, q);
    if (!w) {
        out.singular = true;
        for (std::size_t j = 0; j < m; ++j) A(j, j) += 1e-8;
        w = cholesky_solve(A, q, 0.0);
        if (!w) throw NumericalError("least squares: system singular even after ridge fallback");
    }
    out.weights = std::move(*w);
    out.intercept = ym - dot(xm, out.weights);
    return out;
}

}  // namespace detail

inline LinearModel fit_ols(const Matrix& X, std::span<const double> y) {
    detail::check_xy(X, y);
    auto m = detail::centered_solve(X, y, 0.0);
    m.regularization = "none";
    return m;
}

inline LinearModel fit_ridge(const Matrix& X, std::span<const double> y, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("ridge 'lambda' must be >= 0");
    detail::check_xy(X, y);
    auto m = detail::centered_solve(X, y, lambda);
    m.regularization = "l2(lambda=" + std::to_string(lambda) + ")";
    return m;
}

/// Objective on standardized features z (mean 0, mean square 1) and centered y:
///   (1/2n)|y - Z g|^2 + alpha*l1*|g|_1 + (alpha/2)(1-l1)|g|^2
/// solved by cyclic coordinate descent; coefficients are mapped back to raw scale.
/// Constant columns get weight 0.
inline LinearModel fit_elastic_net(const Matrix& X, std::span<const double> y, double alpha, double l1_ratio,
                                   double tol = 1e-8, std::size_t max_sweeps = 10000) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("elastic net 'alpha' must be >= 0");
    if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) throw ConfigError("elastic net 'l1_ratio' must be in [0,1]");
    detail::check_xy(X, y);
    const std::size_t n = X.rows(), m = X.cols();
    const double nn = static_cast<double>(n);

    Vector mean(m, 0.0), sd(m, 0.0);
    double ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) mean[j] += X(i, j);
        ym += y[i];
    }
    for (auto& v : mean) v /= nn;
    ym /= nn;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) sd[j] += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
    for (auto& v : sd) v = std::sqrt(v / nn);

    // Gram form: G = Z'Z/n, q = Z'y/n
    Matrix G(m, m);
    Vector q(m, 0.0), z(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) z[j] = sd[j] > 0.0 ? (X(i, j) - mean[j]) / sd[j] : 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            q[j] += z[j] * (y[i] - ym);
            for (std::size_t k = 0; k <= j; ++k) G(j, k) += z[j] * z[k];
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        q[j] /= nn;
        for (std::size_t k = 0; k <= j; ++k) {
            G(j, k) /= nn;
            G(k, j) = G(j, k);
        }
    }

    const double l1 = alpha * l1_ratio, l2 = alpha * (1.0 - l1_ratio);
    Vector g(m, 0.0), r = q;  // r = q - G g
    bool converged = false;
    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0, max_coef = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (sd[j] == 0.0) continue;
            const double rho = r[j] + G(j, j) * g[j];
            double nj = 0.0;
            if (rho > l1) nj = (rho - l1) / (G(j, j) + l2);
            else if (rho < -l1) nj = (rho + l1) / (G(j, j) + l2);
            const double delta = nj - g[j];
            if (delta != 0.0) {
                for (std::size_t k = 0; k < m; ++k) r[k] -= G(k, j) * delta;
                g[j] = nj;
            }
            max_delta = std::max(max_delta, std::abs(delta));
            max_coef = std::max(max_coef, std::abs(nj));
        }
        if (max_delta <= tol * std::max(1.0, max_coef)) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericalError("elastic net did not converge after " + std::to_string(sweep) + " sweeps");

    LinearModel out;
    out.weights.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        if (sd[j] > 0.0) out.weights[j] = g[j] / sd[j];
    out.intercept = ym - dot(mean, out.weights);
    out.regularization = "elasticnet(alpha=" + std::to_string(alpha) + ",l1_ratio=" + std::to_string(l1_ratio) + ")";
    return out;
}

/// Objective minimized by fit_elastic_net, evaluated for a raw-scale model.
inline double elastic_net_objective(const Matrix& X, std::span<const double> y, const LinearModel& mdl,
                                    double alpha, double l1_ratio) {
    const std::size_t n = X.rows(), m = X.cols();
    const double nn = static_cast<double>(n);
    Vector sd(m, 0.0), mean(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) mean[j] += X(i, j) / nn;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) sd[j] += (X(i, j) - mean[j]) * (X(i, j) - mean[j]) / nn;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - predict(mdl, X.row(i));
        loss += e * e;
    }
    double pen1 = 0.0, pen2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double gj = mdl.weights[j] * std::sqrt(sd[j]);
        pen1 += std::abs(gj);
        pen2 += gj * gj;
    }
    return loss / (2.0 * nn) + alpha * l1_ratio * pen1 + 0.5 * alpha * (1.0 - l1_ratio) * pen2;
}

// ── ensembles ────────────────────────────────────────────────────────────────

namespace detail {

inline Matrix take_rows(const Matrix& X, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(X.row(idx[i]).begin(), X.cols(), out.row(i).begin());
    return out;
}

/// Least-squares depth-1 split over every feature and midpoint threshold.
inline Stump fit_stump(const Matrix& X, std::span<const double> y) {
    const std::size_t n = X.rows(), m = X.cols();
    const double total = std::accumulate(y.begin(), y.end(), 0.0);
    Stump best;
    best.feature = 0;
    best.threshold = std::numeric_limits<double>::infinity();
    best.left = best.right = total / static_cast<double>(n);
    double best_sse_gain = 0.0;  // maximize sum_l^2/n_l + sum_r^2/n_r
    const double base = total * total / static_cast<double>(n);

    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < m; ++j) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X(a, j) < X(b, j); });
        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_sum += y[order[k]];
            const double xa = X(order[k], j), xb = X(order[k + 1], j);
            if (xa == xb) continue;
            const double nl = static_cast<double>(k + 1), nr = static_cast<double>(n - k - 1);
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
            if (gain > best_sse_gain) {
                best_sse_gain = gain;
                best.feature = j;
                best.threshold = 0.5 * (xa + xb);
                best.left = left_sum / nl;
                best.right = right_sum / nr;
            }
        }
    }
    return best;
}

}  // namespace detail

/// Bootstrap-aggregated OLS. `identity_resample` replaces each bootstrap by the
/// original sample order (used to check the B=1 reduction).
inline EnsembleModel fit_bagging(const Matrix& X, std::span<const double> y, std::size_t B, std::uint64_t seed,
                                 bool identity_resample = false) {
    if (B == 0) throw ConfigError("bagging 'estimators' must be >= 1");
    detail::check_xy(X, y);
    const std::size_t n = X.rows();
    EnsembleModel e;
    e.aggregation = EnsembleModel::Aggregation::Mean;
    e.input_dim = X.cols();
    SplitMix64 rng(seed);
    std::vector<std::size_t> idx(n);
    Vector yb(n);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < n; ++i) idx[i] = identity_resample ? i : rng.below(n);
        for (std::size_t i = 0; i < n; ++i) yb[i] = y[idx[i]];
        e.members.push_back(fit_ols(detail::take_rows(X, idx), yb));
    }
    return e;
}

/// AdaBoost.R2 (Drucker 1997) with linear loss and least-squares stumps fitted
/// on weighted bootstrap resamples.
inline EnsembleModel fit_adaboost_r2(const Matrix& X, std::span<const double> y, std::size_t rounds,
                                     std::uint64_t seed) {
    if (rounds == 0) throw ConfigError("adaboost 'rounds' must be >= 1");
    detail::check_xy(X, y);
    const std::size_t n = X.rows();
    EnsembleModel e;
    e.aggregation = EnsembleModel::Aggregation::WeightedMedian;
    e.input_dim = X.cols();
    SplitMix64 rng(seed);
    Vector w(n, 1.0 / static_cast<double>(n)), cdf(n), err(n), yb(n);
    std::vector<std::size_t> idx(n);

    for (std::size_t round = 0; round < rounds; ++round) {
        std::partial_sum(w.begin(), w.end(), cdf.begin());
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform01() * cdf.back();
            idx[i] = std::min<std::size_t>(
                static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), n - 1);
            yb[i] = y[idx[i]];
        }
        const Stump s = detail::fit_stump(detail::take_rows(X, idx), yb);

        double dmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = std::abs(s(X.row(i)) - y[i]);
            dmax = std::max(dmax, err[i]);
        }
        if (dmax == 0.0) {
            e.stumps.push_back(s);
            e.stage_weights.push_back(1.0);
            e.round_losses.push_back(0.0);
            break;
        }
        double avg = 0.0;
        for (std::size_t i = 0; i < n; ++i) avg += w[i] * err[i] / dmax;
        if (avg >= 0.5) {
            if (e.stumps.empty()) {
                e.stumps.push_back(s);
                e.stage_weights.push_back(1.0);
                e.round_losses.push_back(avg);
            }
            break;
        }
        const double beta = avg / (1.0 - avg);
        e.stumps.push_back(s);
        e.stage_weights.push_back(avg > 0.0 ? std::log(1.0 / beta) : 1.0);
        e.round_losses.push_back(avg);
        if (avg == 0.0) break;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::pow(beta, 1.0 - err[i] / dmax);
            sum += w[i];
        }
        for (auto& v : w) v /= sum;
    }
    return e;
}

}  // namespace slicekpi
