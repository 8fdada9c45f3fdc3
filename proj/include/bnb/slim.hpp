#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "bitset.hpp"
#include "code_table.hpp"
#include "dataset.hpp"

namespace bnb {

struct MdlOptions {
    /// Candidates with lower support are never added.
    std::size_t min_support = 1;
    /// Items a candidate may be extended by; 0 disables candidate growth.
    std::size_t growth_depth = 8;
    /// Improving candidates compared per round; the one with the smallest resulting size is accepted.
    std::size_t choices = 1;
};

namespace detail {

/**
 * Slim-style code table search.
 *
 * Starts from the singleton code table. Each round, every pair of entries
 * that are used together in at least one cover proposes their union as a
 * candidate; candidates are ranked by the estimated gain obtained by assuming
 * the union takes over exactly the co-used covers. Candidates are evaluated
 * in that order; of the first `choices` that lower L(CT) + L(D|CT), the one
 * giving the smallest total is accepted.
 *
 * An improving candidate is first grown one item at a time: the items whose
 * addition carries the most information about the candidate's transactions
 * are tried, and the extension is kept while the exact size keeps dropping.
 * Pairwise unions alone rarely reach a long pattern whose item pairs are
 * only weakly correlated in dense data; growth does.
 *
 * After an acceptance, non-singleton entries whose usage dropped are removed
 * when they become unused or when removing them lowers the total size.
 * Rejected candidates are never reconsidered. The search stops when no
 * candidate improves.
 *
 * Data is kept twice: per-transaction item masks for the cover and
 * per-entry transaction-id bitsets, so only transactions that contain a
 * candidate are re-covered. A re-cover resumes after the unchanged prefix
 * of the current cover.
 */
class SlimMiner {
public:
    SlimMiner(const Dataset& data, const MdlOptions& options)
        : data_(data), options_(options), n_(data.size()), words_(word_count(data.alphabet_size())) {
        rows_.assign(n_ * words_, 0);
        for (std::size_t t = 0; t < n_; ++t) {
            for (ItemId i : data[t]) rows_[t * words_ + (i >> 6)] |= Word{1} << (i & 63);
        }
        std::size_t total = 0;
        for (ItemId i = 0; i < data.alphabet_size(); ++i) total += data.item_support(i);
        item_bits_.resize(data.alphabet_size());
        for (ItemId i = 0; i < data.alphabet_size(); ++i) {
            const auto s = data.item_support(i);
            item_bits_[i] = s > 0 ? -std::log2(static_cast<double>(s) / static_cast<double>(total)) : 0.0;
        }
        // Usages and their total never exceed the initial total usage.
        log2_.resize(total + 1, 0.0);
        for (std::size_t k = 1; k <= total; ++k) log2_[k] = std::log2(static_cast<double>(k));
    }

    CodeTable run() {
        init_singletons();
        while (improve_once()) {
        }
        std::vector<Pattern> out;
        for (const auto& e : entries_) {
            if (e.alive) out.push_back(Pattern{e.items, e.support, e.usage});
        }
        return CodeTable(std::move(out), data_.alphabet_size());
    }

private:
    struct Entry {
        Itemset items;
        Bitset tids;
        std::size_t support = 0;
        std::size_t usage = 0;
        double item_bits = 0.0;
        bool alive = true;
    };

    struct Candidate {
        double gain;
        std::uint32_t a;
        std::uint32_t b;
    };

    static constexpr std::uint32_t kNone = ~std::uint32_t{0};

    // A tentative change of the order at position `start`, with the resulting usages and re-covered transactions.
    struct Trial {
        std::size_t start = 0;
        std::uint32_t inserted = kNone;  ///< entry placed before the current one at `start`
        bool removes = false;            ///< drops the current entry at `start`
        std::vector<std::size_t> usage;
        std::vector<std::size_t> tids;
        std::vector<std::size_t> offsets{0};
        std::vector<std::uint32_t> covers;
        double size = 0.0;
    };

    static bool precedes(const Entry& a, const Entry& b) {
        if (a.items.size() != b.items.size()) return a.items.size() > b.items.size();
        if (a.support != b.support) return a.support > b.support;
        return a.items < b.items;
    }

    std::span<const Word> row(std::size_t t) const { return {rows_.data() + t * words_, words_}; }
    std::span<const Word> mask(std::uint32_t id) const { return {masks_.data() + id * words_, words_}; }

    double lg(std::size_t k) const { return log2_[k]; }
    double xlg(std::size_t k) const { return static_cast<double>(k) * log2_[k]; }

    std::uint32_t push_entry(Itemset items, Bitset tids) {
        const auto id = static_cast<std::uint32_t>(entries_.size());
        masks_.resize((id + 1) * words_, 0);
        Entry e;
        e.items = std::move(items);
        e.support = tids.count();
        e.tids = std::move(tids);
        for (ItemId i : e.items) {
            e.item_bits += item_bits_[i];
            masks_[id * words_ + (i >> 6)] |= Word{1} << (i & 63);
        }
        entries_.push_back(std::move(e));
        pos_.resize(entries_.size(), 0);
        return id;
    }

    void pop_entry() {
        entries_.pop_back();
        masks_.resize(entries_.size() * words_);
        pos_.resize(entries_.size());
    }

    void init_singletons() {
        const std::size_t m = data_.alphabet_size();
        for (ItemId i = 0; i < m; ++i) {
            const auto id = push_entry({i}, data_.tids(i));
            entries_[id].usage = entries_[id].support;
            present_.insert({i});
        }
        order_.resize(m);
        for (std::uint32_t i = 0; i < m; ++i) order_[i] = i;
        std::sort(order_.begin(), order_.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return precedes(entries_[a], entries_[b]); });
        update_positions();

        reserve_co(std::max<std::size_t>(64, 2 * m));
        covers_.assign(n_, {});
        for (std::size_t t = 0; t < n_; ++t) {
            recover(t, 0, kNone, false, cover_buf_);
            covers_[t] = cover_buf_;
            add_pairs(covers_[t], +1);
        }
        std::vector<std::size_t> usage(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) usage[i] = entries_[i].usage;
        size_ = total_size(usage);
    }

    // Masks and sizes are mirrored in cover order so a scan reads contiguous memory.
    void update_positions() {
        order_masks_.resize(order_.size() * words_);
        order_sizes_.resize(order_.size());
        for (std::size_t k = 0; k < order_.size(); ++k) {
            const std::uint32_t id = order_[k];
            pos_[id] = k;
            std::copy_n(masks_.data() + id * words_, words_, order_masks_.data() + k * words_);
            order_sizes_[k] = entries_[id].items.size();
        }
    }

    bool fits(const Word* m) const {
        for (std::size_t w = 0; w < words_; ++w) {
            if (m[w] & ~scratch_[w]) return false;
        }
        return true;
    }

    void take(const Word* m) {
        for (std::size_t w = 0; w < words_; ++w) scratch_[w] &= ~m[w];
    }

    /**
     * Cover of t after a change of the order at position `start`: the
     * current cover's entries before `start` are kept, `inserted` (if any) is
     * tried next, and the scan resumes at the current order's `start`,
     * skipping that entry when `removes`. Returns false, leaving `out`
     * untouched, when `required` does not fit after the kept prefix; the
     * cover is then unchanged.
     */
    bool recover(std::size_t t, std::size_t start, std::uint32_t inserted, bool removes, std::vector<std::uint32_t>& out,
                 const Word* required = nullptr) {
        const auto r = row(t);
        scratch_.assign(r.begin(), r.end());
        std::size_t remaining = data_[t].size();
        prefix_.clear();
        for (std::uint32_t id : covers_[t]) {
            if (pos_[id] >= start) break;
            take(masks_.data() + id * words_);
            remaining -= entries_[id].items.size();
            prefix_.push_back(id);
        }
        if (required && !fits(required)) return false;
        out.assign(prefix_.begin(), prefix_.end());
        if (inserted != kNone && fits(masks_.data() + inserted * words_)) {
            take(masks_.data() + inserted * words_);
            remaining -= entries_[inserted].items.size();
            out.push_back(inserted);
        }
        const std::size_t end = order_.size();
        for (std::size_t k = removes ? start + 1 : start; k < end && remaining > 0; ++k) {
            if (order_sizes_[k] > remaining) continue;
            const Word* m = order_masks_.data() + k * words_;
            if (!fits(m)) continue;
            take(m);
            remaining -= order_sizes_[k];
            out.push_back(order_[k]);
        }
        return true;
    }

    // Co-usage counts live in a square matrix indexed by entry id; only (lo, hi) with lo < hi is used.
    void reserve_co(std::size_t cap) {
        if (cap <= co_cap_) return;
        std::vector<std::uint32_t> next(cap * cap, 0);
        for (std::size_t i = 0; i < co_cap_; ++i) {
            std::copy_n(co_.begin() + static_cast<std::ptrdiff_t>(i * co_cap_), co_cap_,
                        next.begin() + static_cast<std::ptrdiff_t>(i * cap));
        }
        co_ = std::move(next);
        co_cap_ = cap;
    }

    std::uint32_t& co(std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return co_[static_cast<std::size_t>(a) * co_cap_ + b];
    }

    void add_pairs(std::span<const std::uint32_t> cover, int delta) {
        for (std::size_t i = 0; i < cover.size(); ++i) {
            for (std::size_t j = i + 1; j < cover.size(); ++j) co(cover[i], cover[j]) += static_cast<std::uint32_t>(delta);
        }
    }

    double total_size(std::span<const std::size_t> usage) const {
        std::size_t s = 0;
        for (std::size_t u : usage) s += u;
        if (s == 0) return 0.0;
        const double log_s = lg(s);
        double bits = 0.0;
        for (std::size_t i = 0; i < usage.size(); ++i) {
            if (usage[i] == 0) continue;
            bits += static_cast<double>(usage[i] + 1) * (log_s - lg(usage[i])) + entries_[i].item_bits;
        }
        return bits;
    }

    // Slim's estimated gain of merging a and b with co-usage c splits into a term in c alone
    // and one term per entry: gain = pair_[c] + part(a, c) + part(b, c).
    void prepare_gain_terms() {
        const std::size_t s = total_usage_;
        const double u = static_cast<double>(used_entries_);
        const double base = xlg(s) + u * lg(s);
        const std::size_t cmax = std::min(s, n_);
        pair_.assign(cmax + 1, 0.0);
        rest_bits_.assign(cmax + 1, 0.0);
        for (std::size_t c = 1; c <= cmax; ++c) {
            rest_bits_[c] = lg(s - c);
            pair_[c] = base - xlg(s - c) + xlg(c) + lg(c) - (u + 1.0) * rest_bits_[c];
        }
        own_.resize(entries_.size());
        for (std::uint32_t id : order_) {
            const auto& e = entries_[id];
            own_[id] = -xlg(e.usage) - lg(e.usage) - e.item_bits;
        }
    }

    double part(std::uint32_t x, std::size_t c) const {
        const std::size_t left = entries_[x].usage - c;
        if (left == 0) return own_[x] + entries_[x].item_bits + rest_bits_[c];
        return own_[x] + xlg(left) + lg(left);
    }

    double estimated_gain(std::uint32_t a, std::uint32_t b, std::size_t c) const {
        return pair_[c] + part(a, c) + part(b, c);
    }

    void refresh_usage_stats() {
        total_usage_ = 0;
        used_entries_ = 0;
        for (std::uint32_t id : order_) {
            const auto u = entries_[id].usage;
            total_usage_ += u;
            used_entries_ += u > 0 ? 1 : 0;
        }
    }

    /// Re-covers the transactions visited by `affected` from position `start`; fills usages and size.
    template <typename Affected>
    void run_trial(Trial& trial, const Word* required, Affected&& affected) {
        trial.usage.resize(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) trial.usage[i] = entries_[i].usage;
        affected([&](std::size_t t) {
            if (!recover(t, trial.start, trial.inserted, trial.removes, cover_buf_, required)) return;
            for (std::uint32_t id : covers_[t]) --trial.usage[id];
            for (std::uint32_t id : cover_buf_) ++trial.usage[id];
            trial.tids.push_back(t);
            trial.covers.insert(trial.covers.end(), cover_buf_.begin(), cover_buf_.end());
            trial.offsets.push_back(trial.covers.size());
        });
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (!entries_[i].alive) trial.usage[i] = 0;
        }
        trial.size = total_size(trial.usage);
    }

    void commit(const Trial& trial) {
        for (std::size_t k = 0; k < trial.tids.size(); ++k) {
            const std::size_t t = trial.tids[k];
            add_pairs(covers_[t], -1);
            covers_[t].assign(trial.covers.begin() + static_cast<std::ptrdiff_t>(trial.offsets[k]),
                              trial.covers.begin() + static_cast<std::ptrdiff_t>(trial.offsets[k + 1]));
            add_pairs(covers_[t], +1);
        }
        for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].usage = trial.usage[i];
        if (trial.removes) order_.erase(order_.begin() + static_cast<std::ptrdiff_t>(trial.start));
        if (trial.inserted != kNone) order_.insert(order_.begin() + static_cast<std::ptrdiff_t>(trial.start), trial.inserted);
        update_positions();
        size_ = trial.size;
    }

    /// Exact trial for adding `items` (occurring in `tids`), or nothing when it cannot be added.
    std::optional<Trial> evaluate(const Itemset& items, const Bitset& tids) {
        const std::size_t support = tids.count();
        if (support == 0 || support < options_.min_support || present_.count(items)) return std::nullopt;
        const auto id = push_entry(items, tids);
        Trial trial;
        const auto pos = std::lower_bound(order_.begin(), order_.end(), id, [&](std::uint32_t x, std::uint32_t y) {
            return precedes(entries_[x], entries_[y]);
        });
        trial.start = static_cast<std::size_t>(pos - order_.begin());
        trial.inserted = id;
        run_trial(trial, masks_.data() + id * words_, [&](auto&& visit) { entries_[id].tids.for_each(visit); });
        pop_entry();
        return trial;
    }

    /**
     * Item extension of an improving candidate. The chain adds, one at a
     * time, the item carrying the most information count * log2(lift) about
     * the current transactions, up to `growth_depth` items; every prefix of
     * the chain is evaluated exactly and the smallest total size wins.
     */
    void grow(Itemset& items, Bitset& tids, Trial& best) {
        const std::size_t m = data_.alphabet_size();
        const auto n = static_cast<double>(n_);
        Itemset chain = items;
        Bitset chain_tids = tids;
        for (std::size_t depth = 0; depth < options_.growth_depth; ++depth) {
            const auto s = static_cast<double>(chain_tids.count());
            double best_info = 0.0;
            std::optional<ItemId> next;
            for (ItemId i = 0; i < m; ++i) {
                if (std::binary_search(chain.begin(), chain.end(), i)) continue;
                const std::size_t c = intersection_count(chain_tids, data_.tids(i));
                if (c == 0 || c < options_.min_support) continue;
                const auto cd = static_cast<double>(c);
                const double info = cd * std::log2(cd * n / (s * static_cast<double>(data_.item_support(i))));
                if (info > best_info) {
                    best_info = info;
                    next = i;
                }
            }
            if (!next) return;
            chain.insert(std::upper_bound(chain.begin(), chain.end(), *next), *next);
            chain_tids &= data_.tids(*next);
            auto trial = evaluate(chain, chain_tids);
            if (trial && trial->size < best.size - kTolerance) {
                best = std::move(*trial);
                items = chain;
                tids = chain_tids;
            }
        }
    }

    struct Proposal {
        Itemset items;
        Bitset tids;
        Trial trial;
    };

    /// The candidate, grown when it improves, or nothing when it does not improve.
    std::optional<Proposal> propose(Itemset items, std::uint32_t a, std::uint32_t b) {
        Bitset tids = entries_[a].tids & entries_[b].tids;
        auto trial = evaluate(items, tids);
        if (!trial || !(trial->size < size_ - kTolerance)) return std::nullopt;
        if (options_.growth_depth > 0) grow(items, tids, *trial);
        return Proposal{std::move(items), std::move(tids), std::move(*trial)};
    }

    void accept(Proposal p) {
        push_entry(p.items, std::move(p.tids));
        std::vector<std::size_t> before(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) before[i] = entries_[i].usage;
        if (entries_.size() > co_cap_) reserve_co(2 * entries_.size());
        commit(p.trial);
        present_.insert(std::move(p.items));
        prune(before);
    }

    void prune(const std::vector<std::size_t>& before) {
        std::vector<std::uint32_t> shrunk;
        for (std::uint32_t id = 0; id < entries_.size(); ++id) {
            const Entry& e = entries_[id];
            if (e.alive && e.items.size() > 1 && e.usage < before[id]) shrunk.push_back(id);
        }
        std::sort(shrunk.begin(), shrunk.end(), [&](std::uint32_t x, std::uint32_t y) {
            if (entries_[x].usage != entries_[y].usage) return entries_[x].usage < entries_[y].usage;
            return entries_[x].items < entries_[y].items;
        });
        for (std::uint32_t id : shrunk) {
            if (!entries_[id].alive) continue;
            if (entries_[id].usage == 0) {
                remove_entry(id);
                continue;
            }
            Trial trial;
            trial.start = pos_[id];
            trial.removes = true;
            entries_[id].alive = false;
            run_trial(trial, nullptr, [&](auto&& visit) {
                entries_[id].tids.for_each([&](std::size_t t) {
                    if (std::find(covers_[t].begin(), covers_[t].end(), id) != covers_[t].end()) visit(t);
                });
            });
            entries_[id].alive = true;
            if (trial.size < size_ - kTolerance) {
                commit(trial);
                remove_entry(id);
            }
        }
    }

    void remove_entry(std::uint32_t id) {
        Entry& e = entries_[id];
        e.alive = false;
        e.usage = 0;
        present_.erase(e.items);
        order_.erase(std::remove(order_.begin(), order_.end(), id), order_.end());
        update_positions();
    }

    bool improve_once() {
        refresh_usage_stats();
        if (total_usage_ == 0) return false;
        prepare_gain_terms();

        std::vector<std::uint32_t> alive = order_;
        std::sort(alive.begin(), alive.end());
        const std::size_t min_co = std::max<std::size_t>(1, options_.min_support);
        std::vector<Candidate> candidates;
        for (std::size_t i = 0; i < alive.size(); ++i) {
            const std::uint32_t a = alive[i];
            const std::uint32_t* row_co = co_.data() + static_cast<std::size_t>(a) * co_cap_;
            for (std::size_t j = i + 1; j < alive.size(); ++j) {
                const std::uint32_t b = alive[j];
                const std::uint32_t c = row_co[b];
                if (c < min_co) continue;
                const double gain = estimated_gain(a, b, c);
                if (gain > 0.0) candidates.push_back({gain, a, b});
            }
        }

        auto union_of = [&](const Candidate& c) { return set_union(entries_[c.a].items, entries_[c.b].items); };
        // Max-heap on gain; exact ties broken towards the lexicographically smallest union.
        auto worse = [&](const Candidate& x, const Candidate& y) {
            if (x.gain != y.gain) return x.gain < y.gain;
            return union_of(x) > union_of(y);
        };
        std::make_heap(candidates.begin(), candidates.end(), worse);
        std::optional<Proposal> best;
        std::size_t found = 0;
        std::set<Itemset> proposed;
        while (!candidates.empty() && found < std::max<std::size_t>(1, options_.choices)) {
            std::pop_heap(candidates.begin(), candidates.end(), worse);
            const Candidate c = candidates.back();
            candidates.pop_back();
            Itemset items = union_of(c);
            if (present_.count(items) || rejected_.count(items) || proposed.count(items)) continue;
            proposed.insert(items);
            auto p = propose(items, c.a, c.b);
            if (!p) {
                rejected_.insert(std::move(items));
                continue;
            }
            ++found;
            if (!best || p->trial.size < best->trial.size - kTolerance ||
                (!(best->trial.size < p->trial.size - kTolerance) && p->items < best->items)) {
                best = std::move(p);
            }
        }
        if (!best) return false;
        accept(std::move(*best));
        return true;
    }

    static constexpr double kTolerance = 1e-9;

    const Dataset& data_;
    MdlOptions options_;
    std::size_t n_;
    std::size_t words_;
    std::vector<Word> rows_;
    std::vector<double> item_bits_;
    std::vector<double> log2_;

    std::vector<Entry> entries_;
    std::vector<Word> masks_;
    std::vector<std::uint32_t> order_;
    std::vector<std::size_t> pos_;
    std::vector<Word> order_masks_;
    std::vector<std::size_t> order_sizes_;
    std::vector<std::vector<std::uint32_t>> covers_;
    std::vector<std::uint32_t> co_;
    std::size_t co_cap_ = 0;
    std::set<Itemset> present_;
    std::set<Itemset> rejected_;

    double size_ = 0.0;
    std::size_t total_usage_ = 0;
    std::size_t used_entries_ = 0;
    std::vector<double> pair_;
    std::vector<double> rest_bits_;
    std::vector<double> own_;

    std::vector<Word> scratch_;
    std::vector<std::uint32_t> prefix_;
    std::vector<std::uint32_t> cover_buf_;
};

}  // namespace detail

/**
 * Mines a code table that heuristically minimises L(CT) + L(D|CT).
 *
 * The result always holds a singleton entry for every item of the alphabet;
 * every non-singleton entry has positive usage. Deterministic for a given
 * dataset and options.
 */
inline CodeTable mine_mdl(const Dataset& data, const MdlOptions& options = {}) {
    return detail::SlimMiner(data, options).run();
}

/// The code table that covers every transaction by its singletons.
inline CodeTable singleton_code_table(const Dataset& data) {
    std::vector<Pattern> entries;
    for (ItemId i = 0; i < data.alphabet_size(); ++i) {
        const auto s = data.item_support(i);
        entries.push_back(Pattern{{i}, s, s});
    }
    return CodeTable(std::move(entries), data.alphabet_size());
}

}  // namespace bnb
