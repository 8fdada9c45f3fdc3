#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "code_table.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "scoring.hpp"
#include "stats.hpp"
#include "synth.hpp"

namespace bnb {

using nlohmann::json;

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

// Label table: {"0": "age=young", ...}

inline json labels_to_json(std::span<const std::string> labels) {
    json j = json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) j[std::to_string(i)] = labels[i];
    return j;
}

inline std::vector<std::string> labels_from_json(const json& j, std::size_t alphabet_size) {
    std::vector<std::string> labels(alphabet_size);
    for (std::size_t i = 0; i < alphabet_size; ++i) labels[i] = std::to_string(i);
    for (const auto& [key, value] : j.items()) {
        std::size_t id = 0;
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
        if (ec != std::errc() || ptr != key.data() + key.size()) throw ParseError("label key is not an item id: " + key, 0);
        if (id < alphabet_size) labels[id] = value.get<std::string>();
    }
    return labels;
}

/// Dataset with the label table attached.
inline Dataset with_labels(const Dataset& d, std::vector<std::string> labels) {
    std::vector<Itemset> rows(d.transactions().begin(), d.transactions().end());
    return Dataset(std::move(rows), d.alphabet_size(), std::vector<Attribute>(d.schema().begin(), d.schema().end()),
                   std::move(labels));
}

// Patterns: [{"items": [..], "support": n, "usage": n}, ...] in table order.

inline json patterns_to_json(std::span<const Pattern> patterns) {
    json j = json::array();
    for (const auto& p : patterns) j.push_back({{"items", p.items}, {"support", p.support}, {"usage", p.usage}});
    return j;
}

inline std::vector<Pattern> patterns_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("pattern file must hold a JSON array", 0);
    std::vector<Pattern> out;
    for (const auto& e : j) {
        Pattern p;
        p.items = normalized(e.at("items").get<Itemset>());
        p.support = e.value("support", std::size_t{0});
        p.usage = e.value("usage", std::size_t{0});
        out.push_back(std::move(p));
    }
    return out;
}

inline std::string render_itemset(const Itemset& items, const Dataset& d) {
    std::string s = "{";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ' ';
        s += d.label(items[i]);
    }
    return s + "}";
}

inline json itemset_json(const Itemset& items, const Dataset& d) {
    if (!d.has_labels()) return json(items);
    json j = json::array();
    for (ItemId i : items) j.push_back(d.label(i));
    return j;
}

inline json report_to_json(const AnomalyReport& r, const Ranking& ranking, const Dataset& d) {
    json j;
    j["transaction_id"] = r.transaction_id;
    const std::optional<double>* scores[3] = {&r.score0_bits, &r.score1_bits, &r.score2_bits};
    for (int c = 0; c < 3; ++c) {
        if (!ranking.classes[c]) continue;
        const std::string key = "score" + std::to_string(c);
        j[key] = *scores[c] ? json(**scores[c]) : json(nullptr);
        j["rank" + std::to_string(c)] = r.rank[c] ? json(*r.rank[c]) : json(nullptr);
    }
    if (ranking.classes[2]) {
        if (r.explanation) {
            const auto& x = *r.explanation;
            j["explanation"] = {{"pattern_a", itemset_json(x.pattern_a, d)},
                                {"pattern_b", itemset_json(x.pattern_b, d)},
                                {"support_a", x.support_a},
                                {"support_b", x.support_b},
                                {"support_ab", x.support_ab},
                                {"score_bits", x.score_bits}};
        } else {
            j["explanation"] = "no eligible pair";
        }
    }
    return j;
}

/// One JSON object per line, in transaction id order.
inline void write_reports_jsonl(std::ostream& out, const Ranking& ranking, const Dataset& d) {
    for (const auto& r : ranking.reports) out << report_to_json(r, ranking, d).dump() << '\n';
}

/// Class whose order the ranking CSV follows: 2 when requested, else the highest requested.
inline int primary_class(const Ranking& ranking) {
    for (int c = 2; c >= 0; --c) {
        if (ranking.classes[c]) return c;
    }
    return -1;
}

/**
 * transaction_id, score0..2, rank0..2, pattern_a, pattern_b; rows in the
 * order of the primary class. Columns of unrequested classes are empty; an
 * absent class-2 score is written as "none".
 */
inline void write_ranking_csv(std::ostream& out, const Ranking& ranking, const Dataset& d) {
    out << "transaction_id,score0,score1,score2,rank0,rank1,rank2,pattern_a,pattern_b\n";
    const int primary = primary_class(ranking);
    if (primary < 0) return;
    for (std::size_t tid : ranking.order[primary]) {
        const auto& r = ranking.reports[tid];
        out << r.transaction_id;
        const std::optional<double>* scores[3] = {&r.score0_bits, &r.score1_bits, &r.score2_bits};
        for (int c = 0; c < 3; ++c) {
            out << ',';
            if (!ranking.classes[c]) continue;
            out << (*scores[c] ? format_double(**scores[c]) : std::string("none"));
        }
        for (int c = 0; c < 3; ++c) {
            out << ',';
            if (ranking.classes[c] && r.rank[c]) out << *r.rank[c];
        }
        out << ',';
        if (r.explanation) out << render_itemset(r.explanation->pattern_a, d);
        out << ',';
        if (r.explanation) out << render_itemset(r.explanation->pattern_b, d);
        out << '\n';
    }
}

// Distribution export: raw samples as CSV plus a JSON summary.

inline void write_samples_csv(std::ostream& out, const ScoreDistribution& dist) {
    out << "score\n";
    for (double x : dist.samples()) out << format_double(x) << '\n';
}

inline std::vector<double> read_samples_csv(std::istream& in) {
    std::vector<double> out;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (ln == 1 && line == "score")) continue;
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), x);
        if (ec != std::errc() || ptr != line.data() + line.size()) throw ParseError("not a number: " + line, ln);
        out.push_back(x);
    }
    return out;
}

inline json distribution_summary(const ScoreDistribution& dist, std::uint64_t seed, std::size_t replicates,
                                 bool excluded_top) {
    return {{"mean", dist.mean()},     {"stddev", dist.stddev()},   {"n", dist.size()},
            {"absent", dist.absent()}, {"seed", seed},              {"replicates", replicates},
            {"excluded_top", excluded_top}, {"degenerate", dist.degenerate()}, {"rng", kRngAlgorithm}};
}

// Generator configuration and ground truth sidecar.

inline json config_to_json(const GeneratorConfig& c) {
    return {{"kind", to_string(c.kind)},
            {"n_transactions", c.n_transactions},
            {"alphabet_size", c.alphabet_size},
            {"n_attributes", c.n_attributes},
            {"domain_size", c.domain_size},
            {"n_patterns", c.n_patterns},
            {"support_range", {c.support_lo, c.support_hi}},
            {"size_range", {c.size_lo, c.size_hi}},
            {"generator_support", c.generator_support},
            {"singleton_noise", c.singleton_noise},
            {"plant_anomaly", c.plant_anomaly},
            {"seed", c.seed}};
}

/// Reads the keys present in `j` over `base`.
inline GeneratorConfig config_from_json(const json& j, GeneratorConfig base = {}) {
    if (j.contains("kind")) {
        const auto k = j.at("kind").get<std::string>();
        if (k == "transaction") {
            base.kind = DataKind::transaction;
        } else if (k == "categorical") {
            base.kind = DataKind::categorical;
        } else {
            throw ConfigError("unknown data kind: " + k);
        }
    }
    base.n_transactions = j.value("n_transactions", base.n_transactions);
    base.alphabet_size = j.value("alphabet_size", base.alphabet_size);
    base.n_attributes = j.value("n_attributes", base.n_attributes);
    base.domain_size = j.value("domain_size", base.domain_size);
    base.n_patterns = j.value("n_patterns", base.n_patterns);
    if (j.contains("support_range")) {
        base.support_lo = j.at("support_range").at(0).get<double>();
        base.support_hi = j.at("support_range").at(1).get<double>();
    }
    if (j.contains("size_range")) {
        base.size_lo = j.at("size_range").at(0).get<std::size_t>();
        base.size_hi = j.at("size_range").at(1).get<std::size_t>();
    }
    base.generator_support = j.value("generator_support", base.generator_support);
    base.singleton_noise = j.value("singleton_noise", base.singleton_noise);
    base.plant_anomaly = j.value("plant_anomaly", base.plant_anomaly);
    base.seed = j.value("seed", base.seed);
    return base;
}

inline json ground_truth_to_json(const SyntheticData& s, const GeneratorConfig& cfg) {
    json planted = json::array();
    for (const auto& p : s.truth.planted) planted.push_back({{"items", p.items}, {"target_support", p.target_support}});
    json gens = {{"a", s.truth.generator_a}, {"b", s.truth.generator_b}};
    if (s.data.has_labels()) {
        gens["a_labels"] = itemset_json(s.truth.generator_a, s.data);
        gens["b_labels"] = itemset_json(s.truth.generator_b, s.data);
    }
    return {{"generators", gens},
            {"anomaly_transaction_id",
             s.truth.anomaly_transaction_id ? json(*s.truth.anomaly_transaction_id) : json(nullptr)},
            {"patterns", planted},
            {"seed", cfg.seed},
            {"rng", kRngAlgorithm},
            {"config", config_to_json(cfg)}};
}

}  // namespace bnb
