#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"

namespace bnb {

/// An itemset with its support in the data and, for code-table entries, its usage.
struct Pattern {
    Itemset items;
    std::size_t support = 0;
    std::size_t usage = 0;

    friend bool operator==(const Pattern&, const Pattern&) = default;
};

/// Standard Cover Order: longer first, then more frequent, then lexicographic on item ids.
inline bool cover_order_less(const Pattern& a, const Pattern& b) {
    if (a.items.size() != b.items.size()) return a.items.size() > b.items.size();
    if (a.support != b.support) return a.support > b.support;
    return a.items < b.items;
}

/**
 * MDL model of a dataset: patterns in Standard Cover Order with the number of
 * covers each one takes part in.
 *
 * Every item occurring in any entry must also have a singleton entry, so the
 * greedy cover of any transaction over those items terminates. Entries are
 * kept sorted by the cover order; duplicate itemsets are rejected.
 */
class CodeTable {
public:
    CodeTable() = default;

    /// `alphabet_size` > 0 additionally requires a singleton for every item below it.
    explicit CodeTable(std::vector<Pattern> entries, std::size_t alphabet_size = 0) : entries_(std::move(entries)) {
        for (const auto& e : entries_) {
            if (e.items.empty()) throw DomainError("code table entries must be non-empty");
            if (!std::is_sorted(e.items.begin(), e.items.end()) ||
                std::adjacent_find(e.items.begin(), e.items.end()) != e.items.end()) {
                throw DomainError("code table entry items must be sorted and unique");
            }
            if (e.usage > e.support) throw DomainError("entry usage exceeds its support");
            alphabet_size = std::max<std::size_t>(alphabet_size, e.items.back() + 1);
        }
        std::sort(entries_.begin(), entries_.end(), cover_order_less);
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (entries_[i].items == entries_[i - 1].items) throw DomainError("duplicate code table entry");
        }
        singleton_.assign(alphabet_size, kNone);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            total_usage_ += entries_[i].usage;
            if (entries_[i].items.size() == 1) singleton_[entries_[i].items[0]] = i;
        }
        for (std::size_t item = 0; item < alphabet_size; ++item) {
            if (singleton_[item] == kNone) {
                throw DomainError("code table lacks the singleton entry for item " + std::to_string(item));
            }
        }
    }

    std::span<const Pattern> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t total_usage() const { return total_usage_; }
    std::size_t alphabet_size() const { return singleton_.size(); }

    std::size_t singleton_index(ItemId item) const {
        if (item >= singleton_.size()) throw DomainError("item " + std::to_string(item) + " has no singleton entry");
        return singleton_[item];
    }

    std::vector<Pattern> non_singletons() const {
        std::vector<Pattern> out;
        for (const auto& e : entries_) {
            if (e.items.size() > 1) out.push_back(e);
        }
        return out;
    }

    /// Shannon code length of entry `i` in bits. Infinite for unused entries.
    double code_length(std::size_t i) const {
        const auto u = static_cast<double>(entries_[i].usage);
        return -std::log2(u / static_cast<double>(total_usage_));
    }

    /// Code length under +1 Laplace smoothing of all usages; always finite.
    double smoothed_code_length(std::size_t i) const {
        const auto u = static_cast<double>(entries_[i].usage) + 1.0;
        return -std::log2(u / static_cast<double>(total_usage_ + entries_.size()));
    }

    /// Code length of `item` in the standard code table (singleton supports).
    double standard_code_length(ItemId item) const {
        std::size_t total = 0;
        for (ItemId j = 0; j < singleton_.size(); ++j) total += entries_[singleton_[j]].support;
        return -std::log2(static_cast<double>(entries_[singleton_index(item)].support) / static_cast<double>(total));
    }

    /// L(D|CT): bits to encode the covers of the data the usages were counted on.
    double data_length() const {
        double bits = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].usage > 0) bits += static_cast<double>(entries_[i].usage) * code_length(i);
        }
        return bits;
    }

    /// L(CT): each used entry pays its own code plus the standard codes of its items.
    double model_length() const {
        std::size_t total = 0;
        for (std::size_t s : singleton_) total += entries_[s].support;
        double bits = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].usage == 0) continue;
            bits += code_length(i);
            for (ItemId item : entries_[i].items) {
                bits -= std::log2(static_cast<double>(entries_[singleton_[item]].support) / static_cast<double>(total));
            }
        }
        return bits;
    }

    /// L(CT) + L(D|CT).
    double encoded_size() const { return model_length() + data_length(); }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    std::vector<Pattern> entries_;
    std::vector<std::size_t> singleton_;
    std::size_t total_usage_ = 0;
};

/// Indices of the entries selected by the greedy cover of `t`, in cover order.
inline std::vector<std::size_t> cover_indices(std::span<const ItemId> t, const CodeTable& ct) {
    std::vector<std::size_t> out;
    if (t.empty()) return out;
    const std::size_t top = t.back() + 1;
    std::vector<char> uncovered(top, 0);
    for (ItemId i : t) {
        if (i >= ct.alphabet_size()) throw DomainError("item " + std::to_string(i) + " has no singleton entry");
        uncovered[i] = 1;
    }
    std::size_t remaining = t.size();
    const auto entries = ct.entries();
    for (std::size_t e = 0; e < entries.size() && remaining > 0; ++e) {
        const auto& items = entries[e].items;
        if (items.size() > remaining) continue;
        const bool fits = std::all_of(items.begin(), items.end(),
                                      [&](ItemId i) { return i < top && uncovered[i]; });
        if (!fits) continue;
        for (ItemId i : items) uncovered[i] = 0;
        remaining -= items.size();
        out.push_back(e);
    }
    return out;
}

/// Greedy disjoint cover of `t` under the code table's Standard Cover Order.
inline std::vector<Pattern> cover(std::span<const ItemId> t, const CodeTable& ct) {
    std::vector<Pattern> out;
    for (std::size_t e : cover_indices(t, ct)) out.push_back(ct.entries()[e]);
    return out;
}

/// Bits to encode `t` with the code table. Throws when the cover uses an
/// entry with zero usage; callers scoring unseen data should use score1.
inline double encoded_length(std::span<const ItemId> t, const CodeTable& ct) {
    double bits = 0.0;
    for (std::size_t e : cover_indices(t, ct)) {
        if (ct.entries()[e].usage == 0) {
            throw DomainError("cover uses zero-usage pattern; apply usage smoothing to score unseen data");
        }
        bits += ct.code_length(e);
    }
    return bits;
}

enum class PatternSource { mdl, closed, explicit_set };

inline const char* to_string(PatternSource s) {
    switch (s) {
        case PatternSource::mdl: return "mdl";
        case PatternSource::closed: return "closed";
        case PatternSource::explicit_set: return "explicit";
    }
    return "explicit";
}

/// Candidate patterns for the co-occurrence score. Itemsets are unique.
struct PatternSet {
    std::vector<Pattern> patterns;
    PatternSource source = PatternSource::explicit_set;

    PatternSet() = default;
    PatternSet(std::vector<Pattern> ps, PatternSource src) : patterns(std::move(ps)), source(src) {
        std::set<Itemset> seen;
        for (const auto& p : patterns) {
            if (p.items.empty()) throw DomainError("patterns must be non-empty");
            if (!seen.insert(p.items).second) throw DomainError("duplicate pattern in pattern set");
        }
    }

    std::size_t size() const { return patterns.size(); }

    static PatternSet from_code_table(const CodeTable& ct) {
        return PatternSet(std::vector<Pattern>(ct.entries().begin(), ct.entries().end()), PatternSource::mdl);
    }
};

}  // namespace bnb
