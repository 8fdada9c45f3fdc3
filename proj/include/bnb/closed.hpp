#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bitset.hpp"
#include "code_table.hpp"
#include "dataset.hpp"
#include "error.hpp"

namespace bnb {

/// ceil(fraction * n), guarded against representation error in the product (0.05 * 5000 == 250).
inline std::size_t min_support_count(double fraction, std::size_t n) {
    const double raw = fraction * static_cast<double>(n);
    const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::max<std::size_t>(count, 1);
}

namespace detail {

// Depth-first closed itemset enumeration with prefix-preserving closure
// extension: every closed set is generated exactly once from its parent.
class ClosedMiner {
public:
    ClosedMiner(const Dataset& data, std::size_t min_count) : data_(data), min_count_(min_count) {}

    std::vector<Pattern> run() {
        if (data_.size() < min_count_) return {};
        Bitset all(data_.size());
        all.set_all();
        Itemset root = closure(all);
        if (!root.empty()) out_.push_back(Pattern{root, data_.size(), 0});
        expand(root, all, -1);
        std::sort(out_.begin(), out_.end(), [](const Pattern& a, const Pattern& b) { return a.items < b.items; });
        return std::move(out_);
    }

private:
    Itemset closure(const Bitset& tids) const {
        Itemset items;
        for (ItemId i = 0; i < data_.alphabet_size(); ++i) {
            if (tids.is_subset_of(data_.tids(i))) items.push_back(i);
        }
        return items;
    }

    void expand(const Itemset& items, const Bitset& tids, long core) {
        for (auto e = static_cast<ItemId>(core + 1); e < data_.alphabet_size(); ++e) {
            if (std::binary_search(items.begin(), items.end(), e)) continue;
            Bitset next = tids & data_.tids(e);
            const std::size_t support = next.count();
            if (support < min_count_) continue;
            Itemset closed = closure(next);
            // Prefix preservation: the closure may not add any item below e.
            const auto cut_closed = std::lower_bound(closed.begin(), closed.end(), e);
            const auto cut_items = std::lower_bound(items.begin(), items.end(), e);
            if (!std::equal(closed.begin(), cut_closed, items.begin(), cut_items)) continue;
            out_.push_back(Pattern{closed, support, 0});
            expand(closed, next, static_cast<long>(e));
        }
    }

    const Dataset& data_;
    std::size_t min_count_;
    std::vector<Pattern> out_;
};

}  // namespace detail

/**
 * All closed itemsets with support >= ceil(min_support_fraction * |D|),
 * sorted lexicographically. A closed itemset has no proper superset with the
 * same support.
 */
inline PatternSet mine_closed(const Dataset& data, double min_support_fraction) {
    if (!(min_support_fraction > 0.0 && min_support_fraction <= 1.0)) {
        throw ConfigError("minimum support fraction must lie in (0, 1]");
    }
    if (data.empty()) return PatternSet({}, PatternSource::closed);
    const std::size_t min_count = min_support_count(min_support_fraction, data.size());
    return PatternSet(detail::ClosedMiner(data, min_count).run(), PatternSource::closed);
}

}  // namespace bnb
