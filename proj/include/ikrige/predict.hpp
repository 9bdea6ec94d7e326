#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ikrige/optimizer.hpp"

namespace ikrige {

namespace detail {

inline bool exact_interpolation_applies(const KrigingProblem& p, std::size_t& index) {
    if (p.model_c.nugget != 0.0 || p.model_r.nugget != 0.0) return false;
    if (p.model_cr && p.model_cr->nugget != 0.0) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (distance(p.samples[i].loc, p.target) == 0.0) {
            index = i;
            return true;
        }
    }
    return false;
}

/// SK's constraint surface (sum |l_i| = 1) is a union of sign-orthant
/// facets and the penalized iteration only finds the optimum of the basin
/// it starts in. Each candidate facet is therefore seeded at its
/// equality-constrained quadratic optimum and polished by SUMT; the best
/// feasible result wins.
///
/// Candidate facets: the all-positive one, the sign patterns of the
/// classical (unconstrained and unit-sum) solves of the center channel and
/// of the full weighted quadratic, and, for small problems, every sign
/// pattern outright.
inline std::vector<Eigen::VectorXd> sk_starts(const CovarianceCache& cache) {
    const auto n = static_cast<Eigen::Index>(cache.size());
    const double nd = static_cast<double>(n);

    // Full-metric quadratic on the nonnegative orthant: V = l'Ml - 2b'l.
    Eigen::MatrixXd m = cache.a11 * cache.ccc + cache.a22 * cache.crr;
    Eigen::VectorXd b = cache.a11 * cache.ccc_star + cache.a22 * cache.crr_star;
    if (cache.has_cr && cache.a12 != 0.0) {
        m += 2.0 * cache.a12 * cache.ccr;
        b += 2.0 * cache.a12 * cache.ccr_star;
    }

    std::vector<Eigen::VectorXd> patterns;
    const auto push_pattern = [&](const Eigen::VectorXd& like) {
        if (!like.allFinite()) return;
        Eigen::VectorXd s(n);
        for (Eigen::Index i = 0; i < n; ++i) s(i) = like(i) < 0.0 ? -1.0 : 1.0;
        for (const auto& seen : patterns)
            if ((seen - s).cwiseAbs().maxCoeff() == 0.0) return;
        patterns.push_back(s);
    };

    push_pattern(Eigen::VectorXd::Ones(n));
    if (n <= 8) {
        Eigen::VectorXd s(n);
        for (long mask = 0; mask < (1L << n); ++mask) {
            for (Eigen::Index i = 0; i < n; ++i) s(i) = (mask >> i) & 1 ? -1.0 : 1.0;
            push_pattern(s);
        }
    } else {
        const auto classical_patterns = [&](const Eigen::MatrixXd& q, const Eigen::VectorXd& r) {
            Eigen::MatrixXd reg = q;
            reg.diagonal().array() += 1e-10 * std::max(q.diagonal().maxCoeff(), 1e-12);
            push_pattern(reg.ldlt().solve(r));
            Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(n + 1, n + 1);
            bordered.topLeftCorner(n, n) = reg;
            bordered.col(n).head(n).setOnes();
            bordered.row(n).head(n).setOnes();
            Eigen::VectorXd rhs(n + 1);
            rhs.head(n) = r;
            rhs(n) = 1.0;
            push_pattern(bordered.fullPivLu().solve(rhs).head(n).eval());
        };
        classical_patterns(cache.ccc, cache.ccc_star);
        classical_patterns(m, b);
    }

    // Seed each facet at its unit-sum quadratic optimum, nudged strictly
    // inside the orthant so every |l_i| stays away from zero.
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(patterns.size() + 1);
    starts.push_back(Eigen::VectorXd::Constant(n, 1.0 / nd));
    Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (const auto& s : patterns) {
        const Eigen::MatrixXd d = s.asDiagonal();
        bordered.topLeftCorner(n, n) = 2.0 * d * m * d;
        bordered.topLeftCorner(n, n).diagonal().array() += 1e-12;
        bordered.col(n).head(n).setOnes();
        bordered.row(n).head(n).setOnes();
        bordered(n, n) = 0.0;
        rhs.head(n) = 2.0 * d * b;
        rhs(n) = 1.0;
        Eigen::VectorXd mu = bordered.fullPivLu().solve(rhs).head(n);
        if (!mu.allFinite()) continue;
        const double floor = 1e-3 / nd;
        for (Eigen::Index i = 0; i < n; ++i) mu(i) = std::max(mu(i), floor);
        mu /= mu.sum();
        starts.push_back(s.cwiseProduct(mu));
    }
    return starts;
}

}  // namespace detail

/// Solves one interval-valued kriging problem with the SUMT solver.
///
/// A target that coincides with a sample under zero-nugget models is an
/// exact-interpolation case: the unit weight on that sample is the global
/// minimizer (full variance 0), so it is returned directly.
inline KrigingSolution solve(const KrigingProblem& problem, const SolverConfig& config = {}) {
    problem.validate();
    config.validate();
    const std::size_t n = problem.size();
    const CovarianceCache cache = build_cache(problem);

    KrigingSolution out;
    std::size_t collocated = 0;
    if (detail::exact_interpolation_applies(problem, collocated)) {
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        lambda(static_cast<Eigen::Index>(collocated)) = 1.0;
        out.weights.assign(lambda.data(), lambda.data() + lambda.size());
        out.prediction = problem.samples[collocated].value;
        out.kriging_variance = prediction_variance_full(lambda, cache);
        out.constraint_residual = 0.0;
        out.converged = true;
        return out;
    }

    SumtResult r;
    if (problem.mode == KrigingMode::SK) {
        const auto starts = detail::sk_starts(cache);
        // Facet seeds already satisfy the constraint; polishing them under a
        // weak first-stage penalty would let the iterate drift into another
        // basin, so seeded runs begin with the quadratic penalty stiff.
        SolverConfig seeded = config;
        seeded.c0_sk = std::min(config.c0_sk, 1e-3);
        bool have = false;
        double best_v = 0.0;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            SumtResult candidate =
                sumt(cache, KrigingMode::SK, i == 0 ? config : seeded, &starts[i]);
            const double v = variance_part(candidate.lambda, cache, KrigingMode::SK);
            const bool better = !have || (candidate.converged && !r.converged) ||
                                (candidate.converged == r.converged && v < best_v);
            if (better) {
                r = std::move(candidate);
                best_v = v;
                have = true;
            }
        }
    } else {
        r = sumt(cache, KrigingMode::OK, config);
    }
    out.weights.assign(r.lambda.data(), r.lambda.data() + r.lambda.size());
    out.constraint_residual = std::abs(r.constraint_residual);
    out.penalty_steps = r.penalty_steps;
    out.newton_steps = r.newton_steps;
    out.converged = r.converged;
    out.trace = r.trace;
    out.kriging_variance = prediction_variance_full(r.lambda, cache);

    // SK with a known mean: predict on demeaned centers, restore afterwards.
    const double mean_c =
        (problem.mode == KrigingMode::SK && problem.known_mean) ? problem.known_mean->center() : 0.0;
    double center = mean_c;
    double radius = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        center += out.weights[i] * (problem.samples[i].value.center() - mean_c);
        radius += std::abs(out.weights[i]) * problem.samples[i].value.radius();
    }
    out.prediction = Interval::from_center_radius(center, radius);
    return out;
}

/// Shared configuration for gridded prediction.
struct GridConfig {
    VariogramModel model_c;
    VariogramModel model_r;
    std::optional<VariogramModel> model_cr;
    AMatrix a;
    KrigingMode mode = KrigingMode::OK;
    std::optional<Interval> known_mean;
    SolverConfig solver;
    /// Number of nearest samples used per target; unset means automatic
    /// (global for n <= 200, otherwise the 30 nearest).
    std::optional<std::size_t> neighborhood;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct GridPrediction {
    Location target;
    KrigingSolution solution;
    bool ok = false;
    std::string error;
};

/// Independent per-target solves over a target list; failures are recorded
/// per target without aborting the rest. Output order follows input order
/// regardless of scheduling.
inline std::vector<GridPrediction> predict_grid(std::span<const IntervalSample> samples,
                                                std::span<const Location> targets,
                                                const GridConfig& grid) {
    if (targets.empty()) throw std::invalid_argument("predict_grid: no targets");
    if (samples.empty()) throw std::invalid_argument("predict_grid: no samples");

    std::size_t k = grid.neighborhood.value_or(samples.size() <= 200 ? samples.size()
                                                                     : std::size_t{30});
    k = std::min(std::max<std::size_t>(k, 1), samples.size());

    std::vector<GridPrediction> results(targets.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        std::vector<std::size_t> order(samples.size());
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= targets.size()) return;
            GridPrediction& slot = results[t];
            slot.target = targets[t];
            try {
                KrigingProblem p;
                p.target = targets[t];
                p.model_c = grid.model_c;
                p.model_r = grid.model_r;
                p.model_cr = grid.model_cr;
                p.a = grid.a;
                p.mode = grid.mode;
                p.known_mean = grid.known_mean;
                if (k == samples.size()) {
                    p.samples.assign(samples.begin(), samples.end());
                } else {
                    std::iota(order.begin(), order.end(), std::size_t{0});
                    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                                      order.end(), [&](std::size_t a, std::size_t b) {
                                          const double da = distance(samples[a].loc, targets[t]);
                                          const double db = distance(samples[b].loc, targets[t]);
                                          return da != db ? da < db : a < b;
                                      });
                    p.samples.reserve(k);
                    for (std::size_t i = 0; i < k; ++i) p.samples.push_back(samples[order[i]]);
                }
                slot.solution = solve(p, grid.solver);
                slot.ok = true;
            } catch (const std::exception& e) {
                slot.ok = false;
                slot.error = e.what();
            }
        }
    };

    unsigned nthreads = grid.threads != 0 ? grid.threads : std::thread::hardware_concurrency();
    nthreads = std::max(1u, std::min<unsigned>(nthreads, static_cast<unsigned>(targets.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

}  // namespace ikrige
