#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bitset.hpp"
#include "error.hpp"

namespace bnb {

/// Dense 0-based index into the item alphabet.
using ItemId = std::uint32_t;

/// Sorted ascending, duplicate-free list of item ids.
using Itemset = std::vector<ItemId>;

inline void normalize(Itemset& items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
}

inline Itemset normalized(Itemset items) {
    normalize(items);
    return items;
}

inline bool is_subset(std::span<const ItemId> x, std::span<const ItemId> t) {
    return std::includes(t.begin(), t.end(), x.begin(), x.end());
}

inline bool is_disjoint(std::span<const ItemId> a, std::span<const ItemId> b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            return false;
        }
    }
    return true;
}

inline Itemset set_union(std::span<const ItemId> a, std::span<const ItemId> b) {
    Itemset out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

/// One categorical attribute: its values occupy items [first_item, first_item + values.size()).
struct Attribute {
    std::string name;
    ItemId first_item = 0;
    std::vector<std::string> values;

    std::size_t domain_size() const { return values.size(); }
    bool owns(ItemId item) const { return item >= first_item && item < first_item + values.size(); }
};

/**
 * Ordered collection of transactions over a dense item alphabet.
 *
 * Transactions are stored as sorted item arrays (horizontal layout) and, in
 * parallel, as one transaction-id bitset per item (vertical layout) so that
 * support of any itemset is a chain of word-wise ANDs. A dataset is immutable
 * once constructed and may be shared between threads.
 *
 * Categorical data carries a schema; the constructor then checks that the
 * attribute ranges partition the alphabet and that every transaction holds
 * exactly one value per attribute.
 */
class Dataset {
public:
    Dataset() = default;

    /// `alphabet_size` of 0 means "1 + largest item id present".
    explicit Dataset(std::vector<Itemset> transactions, std::size_t alphabet_size = 0,
                     std::vector<Attribute> schema = {}, std::vector<std::string> labels = {})
        : transactions_(std::move(transactions)), schema_(std::move(schema)), labels_(std::move(labels)) {
        std::size_t max_plus_one = 0;
        for (auto& t : transactions_) {
            normalize(t);
            if (!t.empty()) max_plus_one = std::max<std::size_t>(max_plus_one, t.back() + 1);
        }
        if (alphabet_size == 0) alphabet_size = max_plus_one;
        if (max_plus_one > alphabet_size) {
            throw DomainError("item id " + std::to_string(max_plus_one - 1) + " outside alphabet of size " +
                              std::to_string(alphabet_size));
        }
        alphabet_size_ = alphabet_size;
        if (!labels_.empty() && labels_.size() != alphabet_size_) {
            throw DomainError("label table size does not match alphabet size");
        }
        if (!schema_.empty()) validate_schema();
        build_vertical();
    }

    std::size_t size() const { return transactions_.size(); }
    bool empty() const { return transactions_.empty(); }
    std::size_t alphabet_size() const { return alphabet_size_; }

    const Itemset& operator[](std::size_t tid) const { return transactions_[tid]; }
    std::span<const Itemset> transactions() const { return transactions_; }

    bool is_categorical() const { return !schema_.empty(); }
    std::span<const Attribute> schema() const { return schema_; }

    bool has_labels() const { return !labels_.empty(); }
    std::span<const std::string> labels() const { return labels_; }

    /// Label of `item`, or its decimal id when no label table is loaded.
    std::string label(ItemId item) const {
        return has_labels() ? labels_[item] : std::to_string(item);
    }

    /// Transactions containing `item`.
    const Bitset& tids(ItemId item) const { return vertical_[item]; }

    /// Transactions containing every item of `x`. All transactions for the empty set.
    Bitset tids(std::span<const ItemId> x) const {
        Bitset out(size());
        out.set_all();
        for (ItemId i : x) {
            check_item(i);
            out &= vertical_[i];
        }
        return out;
    }

    /// Number of transactions that contain `x`; |D| for the empty set.
    std::size_t support(std::span<const ItemId> x) const {
        if (x.empty()) return size();
        for (ItemId i : x) check_item(i);
        if (x.size() == 1) return item_support_[x[0]];
        if (x.size() == 2) return intersection_count(vertical_[x[0]], vertical_[x[1]]);
        return tids(x).count();
    }

    std::size_t item_support(ItemId item) const {
        check_item(item);
        return item_support_[item];
    }

    /// New dataset made of the given transactions (repeats allowed), same alphabet and metadata.
    Dataset resample(std::span<const std::size_t> tids) const {
        std::vector<Itemset> rows;
        rows.reserve(tids.size());
        for (std::size_t t : tids) rows.push_back(transactions_[t]);
        return Dataset(std::move(rows), alphabet_size_, schema_, labels_);
    }

    void check_item(ItemId item) const {
        if (item >= alphabet_size_) {
            throw DomainError("item id " + std::to_string(item) + " outside alphabet of size " +
                              std::to_string(alphabet_size_));
        }
    }

private:
    void validate_schema() const {
        ItemId next = 0;
        for (const auto& a : schema_) {
            if (a.first_item != next || a.values.empty()) {
                throw DomainError("attribute ranges must partition the alphabet contiguously");
            }
            next += static_cast<ItemId>(a.values.size());
        }
        if (next != alphabet_size_) throw DomainError("attribute ranges do not cover the alphabet");
        for (std::size_t tid = 0; tid < transactions_.size(); ++tid) {
            const auto& t = transactions_[tid];
            bool ok = t.size() == schema_.size();
            for (std::size_t a = 0; ok && a < schema_.size(); ++a) ok = schema_[a].owns(t[a]);
            if (!ok) {
                throw DomainError("transaction " + std::to_string(tid) +
                                  " does not hold exactly one value per attribute");
            }
        }
    }

    void build_vertical() {
        vertical_.assign(alphabet_size_, Bitset(transactions_.size()));
        item_support_.assign(alphabet_size_, 0);
        for (std::size_t tid = 0; tid < transactions_.size(); ++tid) {
            for (ItemId i : transactions_[tid]) {
                vertical_[i].set(tid);
                ++item_support_[i];
            }
        }
    }

    std::vector<Itemset> transactions_;
    std::size_t alphabet_size_ = 0;
    std::vector<Attribute> schema_;
    std::vector<std::string> labels_;
    std::vector<Bitset> vertical_;
    std::vector<std::size_t> item_support_;
};

inline std::size_t support(const Dataset& d, std::span<const ItemId> x) { return d.support(x); }

/// Transaction length -> number of transactions with that length.
inline std::map<std::size_t, std::size_t> length_histogram(const Dataset& d) {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& t : d.transactions()) ++hist[t.size()];
    return hist;
}

namespace detail {

/// Splits on '\n', strips one trailing '\r' per line. A final empty piece after
/// the last newline is dropped.
inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace detail

/**
 * Reads FIMI transaction data: one transaction per line, whitespace-separated
 * non-negative integer item ids. A blank line is an empty transaction.
 * Repeated items on a line collapse to one.
 */
inline Dataset parse_fimi(std::istream& in) {
    std::vector<Itemset> rows;
    const auto lines = detail::read_lines(in);
    rows.reserve(lines.size());
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& line = lines[ln];
        Itemset t;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos == line.size()) break;
            std::size_t end = pos;
            while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
            ItemId value = 0;
            const char* first = line.data() + pos;
            const char* last = line.data() + end;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last) {
                throw ParseError("not a non-negative integer item id: '" + std::string(first, last) + "'", ln + 1);
            }
            t.push_back(value);
            pos = end;
        }
        rows.push_back(std::move(t));
    }
    return Dataset(std::move(rows));
}

/// Writes FIMI text; parse_fimi(write_fimi(d)) reproduces every transaction.
inline void write_fimi(std::ostream& out, const Dataset& d) {
    for (const auto& t : d.transactions()) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out << ' ';
            out << t[i];
        }
        out << '\n';
    }
}

/**
 * Reads comma-separated categorical data (no quoting). Every distinct
 * (column, value) pair becomes one item; the items of one column form a
 * contiguous id range with values in lexicographic order. Ragged rows and
 * empty cells are rejected since missing values are not supported.
 */
inline Dataset parse_categorical_csv(std::istream& in, bool has_header) {
    const auto lines = detail::read_lines(in);
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> cells;
    std::size_t columns = 0;
    bool have_columns = false;

    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& line = lines[ln];
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            row.emplace_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!have_columns) {
            columns = row.size();
            have_columns = true;
        } else if (row.size() != columns) {
            throw ParseError("expected " + std::to_string(columns) + " columns, found " + std::to_string(row.size()) +
                                 " (row " + std::to_string(ln + 1) + ")",
                             ln + 1);
        }
        if (has_header && names.empty()) {
            names = std::move(row);
            continue;
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c].empty() || row[c] == "?") {
                throw ParseError((row[c].empty() ? std::string("empty") : std::string("unknown ('?')")) +
                                     " value in column " + std::to_string(c + 1) + " (row " + std::to_string(ln + 1) +
                                     "); missing values are not supported",
                                 ln + 1);
            }
        }
        cells.push_back(std::move(row));
    }
    if (cells.empty()) return Dataset();
    if (names.empty()) {
        for (std::size_t c = 0; c < columns; ++c) names.push_back("a" + std::to_string(c));
    }

    std::vector<Attribute> schema(columns);
    std::vector<std::map<std::string, ItemId>> index(columns);
    std::vector<std::string> labels;
    ItemId next = 0;
    for (std::size_t c = 0; c < columns; ++c) {
        std::set<std::string> values;
        for (const auto& row : cells) values.insert(row[c]);
        schema[c].name = names[c];
        schema[c].first_item = next;
        for (const auto& v : values) {
            index[c][v] = next++;
            schema[c].values.push_back(v);
            labels.push_back(names[c] + "=" + v);
        }
    }

    std::vector<Itemset> rows;
    rows.reserve(cells.size());
    for (const auto& row : cells) {
        Itemset t(columns);
        for (std::size_t c = 0; c < columns; ++c) t[c] = index[c].at(row[c]);
        rows.push_back(std::move(t));
    }
    return Dataset(std::move(rows), next, std::move(schema), std::move(labels));
}

/// Writes a categorical dataset as CSV with a header row of attribute names.
inline void write_categorical_csv(std::ostream& out, const Dataset& d) {
    if (!d.is_categorical()) throw DomainError("dataset has no categorical schema");
    const auto schema = d.schema();
    for (std::size_t a = 0; a < schema.size(); ++a) out << (a ? "," : "") << schema[a].name;
    out << '\n';
    for (const auto& t : d.transactions()) {
        for (std::size_t a = 0; a < schema.size(); ++a) {
            out << (a ? "," : "") << schema[a].values[t[a] - schema[a].first_item];
        }
        out << '\n';
    }
}

}  // namespace bnb
