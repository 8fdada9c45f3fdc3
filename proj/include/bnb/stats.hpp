#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "code_table.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scoring.hpp"
#include "slim.hpp"

namespace bnb {

/// Empirical score sample with population moments. `absent` counts draws that
/// produced no score (no eligible pair).
class ScoreDistribution {
public:
    ScoreDistribution() = default;
    explicit ScoreDistribution(std::vector<double> samples, std::size_t absent = 0)
        : samples_(std::move(samples)), absent_(absent) {
        if (samples_.empty()) return;
        double sum = 0.0;
        for (double x : samples_) sum += x;
        mean_ = sum / static_cast<double>(samples_.size());
        double ss = 0.0;
        for (double x : samples_) ss += (x - mean_) * (x - mean_);
        stddev_ = std::sqrt(ss / static_cast<double>(samples_.size()));
    }

    std::span<const double> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    std::size_t absent() const { return absent_; }
    double mean() const { return mean_; }
    double stddev() const { return stddev_; }

    /// True when no threshold can be derived: no samples or zero spread.
    bool degenerate() const { return samples_.empty() || !(stddev_ > 0.0); }

private:
    std::vector<double> samples_;
    std::size_t absent_ = 0;
    double mean_ = 0.0;
    double stddev_ = 0.0;
};

struct BootstrapOptions {
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    /// Score every replicate with the pattern set mined once on the original
    /// data instead of re-mining per replicate.
    bool reuse_patterns = false;
    MdlOptions mdl{};
    unsigned threads = 1;
};

/// Class-2 score of every transaction of `d` under `patterns`.
inline std::vector<std::optional<double>> cooccurrence_scores(const Dataset& d, const PatternSet& patterns) {
    CooccurrenceScorer scorer(d, patterns.patterns);
    auto ws = scorer.workspace();
    std::vector<std::optional<double>> out(d.size());
    for (std::size_t t = 0; t < d.size(); ++t) {
        if (auto x = scorer.score(t, ws)) out[t] = x->score_bits;
    }
    return out;
}

/// Same, with the pattern set mined from `d` itself.
inline std::vector<std::optional<double>> cooccurrence_scores(const Dataset& d, const MdlOptions& mdl = {}) {
    return cooccurrence_scores(d, PatternSet::from_code_table(mine_mdl(d, mdl)));
}

/// Id of the transaction ranked first by class-2 score, if any transaction has one.
inline std::optional<std::size_t> top_cooccurrence_transaction(std::span<const std::optional<double>> scores) {
    const auto order = rank_order(scores);
    if (order.empty() || !scores[order.front()]) return std::nullopt;
    return order.front();
}

namespace detail {

/// Resamples |D| transactions with replacement from `pool` for replicate `r`.
inline std::vector<std::size_t> draw_replicate(std::span<const std::size_t> pool, std::size_t n, std::uint64_t seed,
                                               std::size_t r) {
    Rng rng(seed + r);
    std::vector<std::size_t> pick(n);
    for (auto& p : pick) p = pool[rng.index(pool.size())];
    return pick;
}

template <typename Fn>
void for_each_replicate(const Dataset& d, std::span<const std::size_t> pool, const BootstrapOptions& opt,
                        const PatternSet* fixed, Fn&& fn) {
    parallel_for(opt.replicates, opt.threads, [&](unsigned, std::size_t r) {
        const auto pick = draw_replicate(pool, d.size(), opt.seed, r);
        const Dataset sample = d.resample(pick);
        fn(r, fixed ? cooccurrence_scores(sample, *fixed) : cooccurrence_scores(sample, opt.mdl));
    });
}

}  // namespace detail

/**
 * Bootstrap distribution of the highest class-2 score. Each replicate draws
 * |D| transactions with replacement, re-mines the pattern set (unless
 * `reuse_patterns`) and records the maximum score. With `exclude_top`, the
 * transaction ranked first on the original data is removed from the pool
 * before sampling. Replicate r uses seed + r.
 */
inline ScoreDistribution bootstrap_max_scores(const Dataset& d, const BootstrapOptions& opt, bool exclude_top) {
    if (opt.replicates < 1) throw ConfigError("replicates must be at least 1");
    if (exclude_top && d.size() < 2) throw ConfigError("excluding the top transaction needs at least 2 transactions");
    if (d.empty()) return ScoreDistribution({}, opt.replicates);

    std::optional<PatternSet> fixed;
    std::vector<std::size_t> pool(d.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    if (exclude_top || opt.reuse_patterns) {
        const PatternSet original = PatternSet::from_code_table(mine_mdl(d, opt.mdl));
        if (exclude_top) {
            const auto scores = cooccurrence_scores(d, original);
            if (const auto top = top_cooccurrence_transaction(scores)) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(*top));
        }
        if (opt.reuse_patterns) fixed = original;
    }

    std::vector<std::optional<double>> maxima(opt.replicates);
    detail::for_each_replicate(d, pool, opt, fixed ? &*fixed : nullptr,
                               [&](std::size_t r, const std::vector<std::optional<double>>& scores) {
                                   std::optional<double> best;
                                   for (const auto& s : scores) {
                                       if (s && (!best || *s > *best)) best = s;
                                   }
                                   maxima[r] = best;
                               });
    std::vector<double> samples;
    std::size_t absent = 0;
    for (const auto& m : maxima) {
        if (m) {
            samples.push_back(*m);
        } else {
            ++absent;
        }
    }
    return ScoreDistribution(std::move(samples), absent);
}

/// Pooled class-2 scores of every transaction over all bootstrap replicates;
/// transactions without a score are counted in `absent()`.
inline ScoreDistribution bootstrap_all_scores(const Dataset& d, const BootstrapOptions& opt) {
    if (opt.replicates < 1) throw ConfigError("replicates must be at least 1");
    std::optional<PatternSet> fixed;
    if (opt.reuse_patterns && !d.empty()) fixed = PatternSet::from_code_table(mine_mdl(d, opt.mdl));
    std::vector<std::size_t> pool(d.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    if (d.empty()) return ScoreDistribution();

    std::vector<std::vector<std::optional<double>>> per_replicate(opt.replicates);
    detail::for_each_replicate(d, pool, opt, fixed ? &*fixed : nullptr,
                               [&](std::size_t r, std::vector<std::optional<double>> scores) {
                                   per_replicate[r] = std::move(scores);
                               });
    std::vector<double> samples;
    std::size_t absent = 0;
    for (const auto& rep : per_replicate) {
        for (const auto& s : rep) {
            if (s) {
                samples.push_back(*s);
            } else {
                ++absent;
            }
        }
    }
    return ScoreDistribution(std::move(samples), absent);
}

struct SignificanceResult {
    ScoreDistribution dist_with;     ///< top transaction may be drawn
    ScoreDistribution dist_without;  ///< top transaction removed before sampling
    double mean_difference = 0.0;    ///< mean(with) - mean(without)
    /// Fraction of (with, without) sample pairs where the with-sample does not
    /// exceed the without-sample; 0 means complete separation.
    double overlap_fraction = 0.0;
};

inline double overlap_fraction(const ScoreDistribution& with, const ScoreDistribution& without) {
    if (with.size() == 0 || without.size() == 0) return 1.0;
    std::vector<double> other(without.samples().begin(), without.samples().end());
    std::sort(other.begin(), other.end());
    double not_above = 0.0;
    for (double x : with.samples()) {
        // without-samples >= x
        not_above += static_cast<double>(other.end() - std::lower_bound(other.begin(), other.end(), x));
    }
    return not_above / (static_cast<double>(with.size()) * static_cast<double>(without.size()));
}

inline SignificanceResult significance_test(const Dataset& d, const BootstrapOptions& opt) {
    SignificanceResult r;
    r.dist_with = bootstrap_max_scores(d, opt, false);
    r.dist_without = bootstrap_max_scores(d, opt, true);
    r.mean_difference = r.dist_with.mean() - r.dist_without.mean();
    r.overlap_fraction = overlap_fraction(r.dist_with, r.dist_without);
    return r;
}

/// k such that Cantelli's bound 1 / (1 + k^2) equals `fnr`.
inline double cantelli_k(double fnr) {
    if (!(fnr > 0.0 && fnr < 1.0)) throw ConfigError("false-negative rate must lie in (0, 1)");
    return std::sqrt(1.0 / fnr - 1.0);
}

/// theta = mean + k * stddev for the requested false-negative rate.
inline double cantelli_threshold(const ScoreDistribution& dist, double fnr) {
    const double k = cantelli_k(fnr);
    if (dist.degenerate()) throw DegenerateDistribution("score distribution has zero spread; no threshold exists");
    return dist.mean() + k * dist.stddev();
}

/// Cantelli bound for a threshold placed at `score`; 1 when score <= mean.
inline double fnr_for_score(const ScoreDistribution& dist, double score) {
    if (dist.degenerate()) throw DegenerateDistribution("score distribution has zero spread; no threshold exists");
    if (!(score > dist.mean())) return 1.0;
    const double k = (score - dist.mean()) / dist.stddev();
    return 1.0 / (1.0 + k * k);
}

/// Reports whose class-2 score is strictly above `theta`, order preserved.
inline std::vector<AnomalyReport> flag_above_threshold(std::span<const AnomalyReport> reports, double theta) {
    std::vector<AnomalyReport> out;
    for (const auto& r : reports) {
        if (r.score2_bits && *r.score2_bits > theta) out.push_back(r);
    }
    return out;
}

}  // namespace bnb
