#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "bitset.hpp"
#include "code_table.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace bnb {

using LengthHistogram = std::map<std::size_t, std::size_t>;

/// Class 0: bits to state the transaction length, -log2(P(|t|)). Lengths not
/// seen in the data get count 1 out of n + 1.
inline double score0(std::size_t length, const LengthHistogram& hist, std::size_t n) {
    const auto it = hist.find(length);
    if (it == hist.end() || it->second == 0) return std::log2(static_cast<double>(n) + 1.0);
    return -std::log2(static_cast<double>(it->second) / static_cast<double>(n));
}

/// Class 1: compressed length of `t` under the code table. When the cover
/// needs an entry of zero usage, all codes of this transaction use +1
/// Laplace-smoothed usages.
inline double score1(std::span<const ItemId> t, const CodeTable& ct) {
    const auto used = cover_indices(t, ct);
    const bool smooth = std::any_of(used.begin(), used.end(), [&](std::size_t e) { return ct.entries()[e].usage == 0; });
    double bits = 0.0;
    for (std::size_t e : used) bits += smooth ? ct.smoothed_code_length(e) : ct.code_length(e);
    return bits;
}

/// The pattern pair responsible for a class-2 score.
struct Score2Explanation {
    Itemset pattern_a;  ///< lexicographically smaller pattern of the pair
    Itemset pattern_b;
    std::size_t support_a = 0;
    std::size_t support_b = 0;
    std::size_t support_ab = 0;
    double score_bits = 0.0;
};

/// -log2 P(XY) + log2(P(X) P(Y)) with P = support / n, i.e. minus log2 of the lift.
inline double pair_score_bits(std::size_t support_a, std::size_t support_b, std::size_t support_ab, std::size_t n) {
    const auto nn = static_cast<double>(n);
    return -std::log2(static_cast<double>(support_ab) / nn) +
           std::log2((static_cast<double>(support_a) / nn) * (static_cast<double>(support_b) / nn));
}

/**
 * Class-2 (co-occurrence) scorer over a fixed pattern set.
 *
 * A transaction's score is the maximum over unordered pairs {X, Y} of
 * distinct, disjoint patterns contained in it of -log2 of the lift of X and Y,
 * with probabilities taken from supports in the full dataset. Pairs are
 * compared exactly as rationals sa * sb / sab; among equal values the pair
 * that comes first lexicographically (X, then Y) wins.
 *
 * Patterns are sorted and deduplicated on construction; patterns that never
 * occur are dropped. Per transaction, only patterns contained in it are
 * paired. Pair supports are memoised per workspace.
 */
class CooccurrenceScorer {
public:
    CooccurrenceScorer(const Dataset& data, std::span<const Pattern> patterns) : data_(data) {
        std::vector<Itemset> sets;
        sets.reserve(patterns.size());
        for (const auto& p : patterns) {
            for (ItemId i : p.items) data.check_item(i);
            sets.push_back(p.items);
        }
        std::sort(sets.begin(), sets.end());
        sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
        item_words_ = word_count(data.alphabet_size());
        for (auto& items : sets) {
            if (items.empty()) continue;
            Bitset tids = data.tids(items);
            const std::size_t s = tids.count();
            if (s == 0) continue;
            Entry e;
            e.mask.assign(item_words_, 0);
            for (ItemId i : items) e.mask[i >> 6] |= Word{1} << (i & 63);
            e.items = std::move(items);
            e.tids = std::move(tids);
            e.support = s;
            entries_.push_back(std::move(e));
        }
    }

    /// Patterns actually used (sorted, occurring in the data).
    std::size_t size() const { return entries_.size(); }

    struct Workspace {
        std::vector<std::int32_t> dense;
        std::unordered_map<std::uint64_t, std::int32_t> sparse;
        std::vector<std::uint32_t> contained;
        std::uint64_t pair_evaluations = 0;
    };

    Workspace workspace() const {
        Workspace ws;
        if (entries_.size() <= kDenseLimit) ws.dense.assign(entries_.size() * entries_.size(), kUnknown);
        return ws;
    }

    /// Score of transaction `tid` of the dataset, or nullopt without an eligible pair.
    std::optional<Score2Explanation> score(std::size_t tid, Workspace& ws) const {
        ws.contained.clear();
        for (std::uint32_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].tids.test(tid)) ws.contained.push_back(i);
        }
        return best_pair(ws);
    }

    /// Score of an arbitrary itemset against the dataset's supports.
    std::optional<Score2Explanation> score_items(std::span<const ItemId> t, Workspace& ws) const {
        std::vector<Word> mask(item_words_, 0);
        for (ItemId i : t) {
            if (i < data_.alphabet_size()) mask[i >> 6] |= Word{1} << (i & 63);
        }
        ws.contained.clear();
        for (std::uint32_t i = 0; i < entries_.size(); ++i) {
            if (words_subset(entries_[i].mask, mask)) ws.contained.push_back(i);
        }
        return best_pair(ws);
    }

    /// Scores every transaction; `pair_evaluations` receives the number of pairs inspected.
    std::vector<std::optional<Score2Explanation>> score_all(unsigned threads = 1,
                                                            std::uint64_t* pair_evaluations = nullptr) const {
        std::vector<std::optional<Score2Explanation>> out(data_.size());
        const unsigned workers = std::max(1U, threads);
        std::vector<Workspace> spaces;
        for (unsigned w = 0; w < std::min<std::size_t>(workers, std::max<std::size_t>(1, data_.size())); ++w) {
            spaces.push_back(workspace());
        }
        parallel_for(data_.size(), static_cast<unsigned>(spaces.size()),
                     [&](unsigned w, std::size_t tid) { out[tid] = score(tid, spaces[w]); });
        if (pair_evaluations) {
            *pair_evaluations = 0;
            for (const auto& ws : spaces) *pair_evaluations += ws.pair_evaluations;
        }
        return out;
    }

private:
    static constexpr std::size_t kDenseLimit = 2048;
    static constexpr std::int32_t kUnknown = -1;
    static constexpr std::int32_t kOverlap = -2;

    struct Entry {
        Itemset items;
        std::vector<Word> mask;
        Bitset tids;
        std::size_t support = 0;
    };

    /// Co-support of a disjoint pair, or kOverlap.
    std::int32_t pair_support(std::uint32_t a, std::uint32_t b, Workspace& ws) const {
        auto compute = [&] {
            if (words_intersect(entries_[a].mask, entries_[b].mask)) return kOverlap;
            return static_cast<std::int32_t>(intersection_count(entries_[a].tids, entries_[b].tids));
        };
        if (!ws.dense.empty()) {
            auto& slot = ws.dense[static_cast<std::size_t>(a) * entries_.size() + b];
            if (slot == kUnknown) slot = compute();
            return slot;
        }
        const std::uint64_t key = static_cast<std::uint64_t>(a) * entries_.size() + b;
        auto [it, inserted] = ws.sparse.try_emplace(key, kUnknown);
        if (inserted) it->second = compute();
        return it->second;
    }

    std::optional<Score2Explanation> best_pair(Workspace& ws) const {
        __extension__ using u128 = unsigned __int128;
        bool found = false;
        std::uint32_t best_a = 0;
        std::uint32_t best_b = 0;
        std::uint64_t best_ab = 0;
        const auto& c = ws.contained;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::uint64_t sa = entries_[c[i]].support;
            for (std::size_t j = i + 1; j < c.size(); ++j) {
                ++ws.pair_evaluations;
                const std::int32_t sab = pair_support(c[i], c[j], ws);
                if (sab <= 0) continue;
                const std::uint64_t sb = entries_[c[j]].support;
                bool better = !found;
                if (found) {
                    // sa*sb/sab > best_sa*best_sb/best_sab
                    const u128 lhs = static_cast<u128>(sa) * sb * best_ab;
                    const u128 rhs = static_cast<u128>(entries_[best_a].support) * entries_[best_b].support *
                                     static_cast<std::uint64_t>(sab);
                    better = lhs > rhs;
                }
                if (better) {
                    found = true;
                    best_a = c[i];
                    best_b = c[j];
                    best_ab = static_cast<std::uint64_t>(sab);
                }
            }
        }
        if (!found) return std::nullopt;
        Score2Explanation x;
        x.pattern_a = entries_[best_a].items;
        x.pattern_b = entries_[best_b].items;
        x.support_a = entries_[best_a].support;
        x.support_b = entries_[best_b].support;
        x.support_ab = best_ab;
        x.score_bits = pair_score_bits(x.support_a, x.support_b, x.support_ab, data_.size());
        return x;
    }

    const Dataset& data_;
    std::size_t item_words_ = 0;
    std::vector<Entry> entries_;
};

/// Class-2 score of a single itemset `t` with pattern set `s` and supports from `d`.
inline std::optional<Score2Explanation> score2(std::span<const ItemId> t, const PatternSet& s, const Dataset& d) {
    CooccurrenceScorer scorer(d, s.patterns);
    auto ws = scorer.workspace();
    return scorer.score_items(t, ws);
}

/// Which anomaly classes to compute: index 0, 1, 2.
using ClassSelection = std::array<bool, 3>;

struct AnomalyReport {
    std::size_t transaction_id = 0;
    std::optional<double> score0_bits;
    std::optional<double> score1_bits;
    std::optional<double> score2_bits;
    std::optional<Score2Explanation> explanation;
    std::array<std::optional<std::size_t>, 3> rank;  ///< 1-based, per requested class
};

struct Ranking {
    ClassSelection classes{};
    std::vector<AnomalyReport> reports;                ///< indexed by transaction id
    std::array<std::vector<std::size_t>, 3> order;     ///< per class: transaction ids, most anomalous first

    /// Reports in the order of class `c`.
    std::vector<AnomalyReport> ranked(int c) const {
        std::vector<AnomalyReport> out;
        out.reserve(order[c].size());
        for (std::size_t tid : order[c]) out.push_back(reports[tid]);
        return out;
    }
};

/// Descending by score, ties by transaction id; absent scores rank last.
inline std::vector<std::size_t> rank_order(std::span<const std::optional<double>> scores) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = scores[a];
        const auto& y = scores[b];
        if (x.has_value() != y.has_value()) return x.has_value();
        if (x && *x != *y) return *x > *y;
        return a < b;
    });
    return order;
}

/**
 * Scores every transaction of `d` for the selected classes and ranks them.
 * Class 1 needs `ct`, class 2 needs `s`.
 */
inline Ranking rank(const Dataset& d, const PatternSet* s, const CodeTable* ct, ClassSelection classes,
                    unsigned threads = 1) {
    if (classes[1] && !ct) throw ConfigError("class 1 scoring needs a code table");
    if (classes[2] && !s) throw ConfigError("class 2 scoring needs a pattern set");
    Ranking r;
    r.classes = classes;
    r.reports.resize(d.size());
    for (std::size_t t = 0; t < d.size(); ++t) r.reports[t].transaction_id = t;

    if (classes[0]) {
        const auto hist = length_histogram(d);
        for (std::size_t t = 0; t < d.size(); ++t) r.reports[t].score0_bits = score0(d[t].size(), hist, d.size());
    }
    if (classes[1]) {
        parallel_for(d.size(), threads, [&](unsigned, std::size_t t) { r.reports[t].score1_bits = score1(d[t], *ct); });
    }
    if (classes[2]) {
        CooccurrenceScorer scorer(d, s->patterns);
        auto scores = scorer.score_all(threads);
        for (std::size_t t = 0; t < d.size(); ++t) {
            if (scores[t]) {
                r.reports[t].score2_bits = scores[t]->score_bits;
                r.reports[t].explanation = std::move(scores[t]);
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        if (!classes[c]) continue;
        std::vector<std::optional<double>> scores(d.size());
        for (std::size_t t = 0; t < d.size(); ++t) {
            const auto& rep = r.reports[t];
            scores[t] = c == 0 ? rep.score0_bits : c == 1 ? rep.score1_bits : rep.score2_bits;
        }
        r.order[c] = rank_order(scores);
        for (std::size_t pos = 0; pos < r.order[c].size(); ++pos) r.reports[r.order[c][pos]].rank[c] = pos + 1;
    }
    return r;
}

}  // namespace bnb
