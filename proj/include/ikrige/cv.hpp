#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ikrige/predict.hpp"
#include "ikrige/snowload.hpp"

namespace ikrige {

struct CvMetrics {
    double rmse = 0.0;
    double rmse_c = 0.0;
    double rmse_r = 0.0;
    std::size_t count = 0;
};

/// RMSE of interval predictions: the combined metric is the root mean
/// squared interval distance (center error and radius error in quadrature),
/// alongside the separate center/radius RMSEs.
inline CvMetrics rmse_metrics(std::span<const Interval> predictions,
                              std::span<const Interval> truth) {
    if (predictions.size() != truth.size())
        throw std::invalid_argument("rmse_metrics: size mismatch");
    if (predictions.empty()) throw std::invalid_argument("rmse_metrics: empty input");
    double ssc = 0.0, ssr = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double dc = predictions[i].center() - truth[i].center();
        const double dr = predictions[i].radius() - truth[i].radius();
        ssc += dc * dc;
        ssr += dr * dr;
    }
    const double n = static_cast<double>(predictions.size());
    return {std::sqrt((ssc + ssr) / n), std::sqrt(ssc / n), std::sqrt(ssr / n), predictions.size()};
}

/// Prediction models compared by cross-validation.
enum class CvModel { lm, global_mean, point_sk, interval_sk, interval_ok };

inline std::string to_string(CvModel m) {
    switch (m) {
        case CvModel::lm: return "LM";
        case CvModel::global_mean: return "Mean";
        case CvModel::point_sk: return "SK";
        case CvModel::interval_sk: return "ISK";
        case CvModel::interval_ok: return "IOK";
    }
    return "?";
}

struct CvConfig {
    int folds = 10;
    std::uint64_t seed = 0;
    std::size_t bins = 15;
    double cutoff = 0.0;  // 0: a third of the training bounding-box diagonal
    VariogramFamily family = VariogramFamily::spherical;
    AMatrix a;
    SolverConfig solver;
    std::optional<std::size_t> neighborhood;
    unsigned threads = 0;
    bool detrend_elevation = true;
};

struct CvModelResult {
    CvModel model = CvModel::lm;
    CvMetrics overall;
    std::vector<CvMetrics> per_fold;
    std::size_t solver_failures = 0;
};

/// Seeded random partition into near-equal folds; every sample lands in
/// exactly one fold.
inline std::vector<std::vector<std::size_t>> cv_folds(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2 || static_cast<std::size_t>(folds) > n)
        throw std::invalid_argument("cv_folds: need 2 <= folds <= n");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
    const double per = static_cast<double>(n) / folds;
    for (int f = 0; f < folds; ++f) {
        const auto a = static_cast<std::size_t>(std::llround(f * per));
        const auto b = static_cast<std::size_t>(std::llround((f + 1) * per));
        out[static_cast<std::size_t>(f)].assign(order.begin() + static_cast<std::ptrdiff_t>(a),
                                                order.begin() + static_cast<std::ptrdiff_t>(b));
    }
    return out;
}

namespace detail {

inline double bbox_diagonal(std::span<const IntervalSample> samples) {
    double xmin = samples[0].loc.x, xmax = xmin, ymin = samples[0].loc.y, ymax = ymin;
    for (const auto& s : samples) {
        xmin = std::min(xmin, s.loc.x);
        xmax = std::max(xmax, s.loc.x);
        ymin = std::min(ymin, s.loc.y);
        ymax = std::max(ymax, s.loc.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

inline VariogramModel heuristic_init(const EmpiricalVariogram& emp, Channel ch,
                                     VariogramFamily family, double cutoff) {
    double first = 0.0, level = 0.0;
    int seen = 0;
    const auto g = emp.gamma(ch);
    for (std::size_t k = 0; k < emp.size(); ++k) {
        if (emp.pair_counts[k] == 0 || !std::isfinite(g[k])) continue;
        if (seen == 0) first = g[k];
        level = std::max(level, g[k]);
        ++seen;
    }
    VariogramModel m;
    m.family = family;
    m.nugget = std::max(0.0, 0.5 * first);
    m.partial_sill = std::max(level - m.nugget, 1e-8 * std::max(level, 1.0));
    m.range = 0.5 * cutoff;
    return m;
}

/// Fits one channel, falling back to the heuristic when the data defeat the
/// optimizer (degenerate folds happen in cross-validation).
inline VariogramModel fit_channel(const EmpiricalVariogram& emp, Channel ch,
                                  VariogramFamily family, double cutoff) {
    const auto g = emp.gamma(ch);
    double peak = 0.0;
    for (std::size_t k = 0; k < emp.size(); ++k)
        if (emp.pair_counts[k] > 0 && std::isfinite(g[k])) peak = std::max(peak, std::abs(g[k]));
    if (peak < 1e-30) return {family, 0.0, 0.0, std::max(cutoff, 1.0)};
    const VariogramModel init = heuristic_init(emp, ch, family, cutoff);
    try {
        return fit_wls(emp, ch, family, init).model;
    } catch (const std::exception&) {
        return init;
    }
}

}  // namespace detail

/// K-fold cross-validation over the model ladder: elevation trend only (LM),
/// global mean interval, classical point kriging of the detrended centers,
/// and interval-valued SK/OK. Per fold, trend and variograms are estimated
/// on the training portion only; metrics compare retrended predictions
/// against the held-out intervals.
inline std::vector<CvModelResult> run_cv(std::span<const IntervalSample> samples, const CvConfig& cfg) {
    const std::size_t n = samples.size();
    const auto folds = cv_folds(n, cfg.folds, cfg.seed);

    const std::vector<CvModel> models = {CvModel::lm, CvModel::global_mean, CvModel::point_sk,
                                         CvModel::interval_sk, CvModel::interval_ok};
    std::vector<CvModelResult> results(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) results[m].model = models[m];

    // Pooled squared errors across folds.
    std::vector<double> pool_ssc(models.size(), 0.0), pool_ssr(models.size(), 0.0);
    std::size_t pool_n = 0;

    for (const auto& test_idx : folds) {
        std::vector<IntervalSample> train;
        train.reserve(n - test_idx.size());
        std::vector<char> is_test(n, 0);
        for (std::size_t i : test_idx) is_test[i] = 1;
        for (std::size_t i = 0; i < n; ++i)
            if (!is_test[i]) train.push_back(samples[i]);
        if (train.size() < 2) throw std::invalid_argument("run_cv: fold with fewer than 2 training samples");

        // Trend on the training portion (identity trend when disabled).
        TrendModel trend;
        std::vector<IntervalSample> residuals;
        if (cfg.detrend_elevation) {
            auto d = detrend(train);
            trend = d.trend;
            residuals = std::move(d.residuals);
        } else {
            residuals.assign(train.begin(), train.end());
        }
        const auto to_data_scale = [&](const Location& loc, const Interval& resid) {
            return cfg.detrend_elevation ? retrend(trend, loc, resid) : resid;
        };

        const double cutoff = cfg.cutoff > 0.0 ? cfg.cutoff : detail::bbox_diagonal(train) / 3.0;
        const auto edges = make_bin_edges(cutoff, cfg.bins);
        const auto emp = empirical_variograms(residuals, edges);
        const VariogramModel model_c = detail::fit_channel(emp, Channel::C, cfg.family, cutoff);
        const VariogramModel model_r = detail::fit_channel(emp, Channel::R, cfg.family, cutoff);

        // Global mean of the training intervals on the data scale.
        double mean_center = 0.0, mean_radius = 0.0;
        for (const auto& s : train) {
            mean_center += s.value.center();
            mean_radius += s.value.radius();
        }
        mean_center /= static_cast<double>(train.size());
        mean_radius /= static_cast<double>(train.size());
        const Interval mean_interval = Interval::from_center_radius(mean_center, mean_radius);

        // Classical point SK on residual centers: factor the training
        // covariance once per fold.
        const auto nt = static_cast<Eigen::Index>(residuals.size());
        Eigen::MatrixXd cmat(nt, nt);
        for (Eigen::Index i = 0; i < nt; ++i)
            for (Eigen::Index j = i; j < nt; ++j) {
                const double d = distance(residuals[static_cast<std::size_t>(i)].loc,
                                          residuals[static_cast<std::size_t>(j)].loc);
                cmat(i, j) = cmat(j, i) = cov_from_variogram(model_c, d);
            }
        cmat.diagonal().array() += 1e-10 * std::max(model_c.sill(), 1e-12);
        const Eigen::LDLT<Eigen::MatrixXd> cfac(cmat);
        Eigen::VectorXd resid_centers(nt);
        for (Eigen::Index i = 0; i < nt; ++i)
            resid_centers(i) = residuals[static_cast<std::size_t>(i)].value.center();

        std::vector<Location> targets;
        targets.reserve(test_idx.size());
        for (std::size_t i : test_idx) targets.push_back(samples[i].loc);

        GridConfig grid;
        grid.model_c = model_c;
        grid.model_r = model_r;
        grid.a = cfg.a;
        grid.solver = cfg.solver;
        grid.neighborhood = cfg.neighborhood;
        grid.threads = cfg.threads;
        grid.mode = KrigingMode::SK;
        grid.known_mean = Interval(0.0, 0.0);  // residual centers have mean zero
        const auto isk = predict_grid(residuals, targets, grid);
        grid.mode = KrigingMode::OK;
        grid.known_mean.reset();
        const auto iok = predict_grid(residuals, targets, grid);

        std::vector<std::vector<Interval>> fold_preds(models.size());
        std::vector<Interval> fold_truth;
        for (std::size_t t = 0; t < test_idx.size(); ++t) {
            const Location& loc = targets[t];
            fold_truth.push_back(samples[test_idx[t]].value);

            const Interval trend_only = to_data_scale(loc, Interval(0.0, 0.0));
            fold_preds[0].push_back(trend_only);
            fold_preds[1].push_back(mean_interval);

            Eigen::VectorXd cvec(nt);
            for (Eigen::Index i = 0; i < nt; ++i)
                cvec(i) = cov_from_variogram(model_c,
                                             distance(residuals[static_cast<std::size_t>(i)].loc, loc));
            const double sk_resid = cfac.solve(cvec).dot(resid_centers);
            fold_preds[2].push_back(to_data_scale(loc, Interval(sk_resid, sk_resid)));

            const auto take = [&](const GridPrediction& gp, std::size_t model_index) {
                if (gp.ok) {
                    fold_preds[model_index].push_back(to_data_scale(loc, gp.solution.prediction));
                } else {
                    ++results[model_index].solver_failures;
                    fold_preds[model_index].push_back(trend_only);
                }
            };
            take(isk[t], 3);
            take(iok[t], 4);
        }

        for (std::size_t m = 0; m < models.size(); ++m) {
            const auto metrics = rmse_metrics(fold_preds[m], fold_truth);
            results[m].per_fold.push_back(metrics);
            const double nn = static_cast<double>(metrics.count);
            pool_ssc[m] += metrics.rmse_c * metrics.rmse_c * nn;
            pool_ssr[m] += metrics.rmse_r * metrics.rmse_r * nn;
        }
        pool_n += test_idx.size();
    }

    for (std::size_t m = 0; m < models.size(); ++m) {
        const double nn = static_cast<double>(pool_n);
        results[m].overall.rmse = std::sqrt((pool_ssc[m] + pool_ssr[m]) / nn);
        results[m].overall.rmse_c = std::sqrt(pool_ssc[m] / nn);
        results[m].overall.rmse_r = std::sqrt(pool_ssr[m] / nn);
        results[m].overall.count = pool_n;
    }
    return results;
}

}  // namespace ikrige
