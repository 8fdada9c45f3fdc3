#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bitset.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace bnb {

enum class DataKind { transaction, categorical };

inline const char* to_string(DataKind k) { return k == DataKind::transaction ? "transaction" : "categorical"; }

/// Parameters of the planted-anomaly generators.
struct GeneratorConfig {
    DataKind kind = DataKind::transaction;
    std::size_t n_transactions = 5000;
    std::size_t alphabet_size = 50;  ///< transaction data
    std::size_t n_attributes = 20;   ///< categorical data
    std::size_t domain_size = 5;     ///< categorical data, values per attribute
    std::size_t n_patterns = 100;
    double support_lo = 0.05;
    double support_hi = 0.10;
    std::size_t size_lo = 3;
    std::size_t size_hi = 6;
    double generator_support = 0.20;
    double singleton_noise = 0.10;  ///< transaction data
    bool plant_anomaly = true;
    std::uint64_t seed = 0;

    /// Occurrences stamped for each anomaly generator.
    std::size_t generator_count() const {
        return static_cast<std::size_t>(std::llround(generator_support * static_cast<double>(n_transactions)));
    }

    void validate() const {
        if (n_transactions == 0) throw ConfigError("n_transactions must be positive");
        if (!(support_lo > 0.0 && support_lo <= support_hi && support_hi < 1.0)) {
            throw ConfigError("pattern support range must satisfy 0 < lo <= hi < 1");
        }
        if (!(generator_support > 0.0 && generator_support < 1.0)) throw ConfigError("generator support must lie in (0, 1)");
        if (size_lo < 2 || size_hi < size_lo) throw ConfigError("pattern sizes must satisfy 2 <= lo <= hi");
        if (!(singleton_noise >= 0.0 && singleton_noise <= 1.0)) throw ConfigError("singleton noise must lie in [0, 1]");
        const std::size_t slots = kind == DataKind::transaction ? alphabet_size : n_attributes;
        if (slots < 2 * size_hi) {
            throw ConfigError(std::string(kind == DataKind::transaction ? "alphabet" : "attribute count") +
                              " too small for two disjoint anomaly generators of size " + std::to_string(size_hi));
        }
        if (kind == DataKind::categorical && domain_size < 1) throw ConfigError("domain size must be positive");
        const std::size_t g = generator_count();
        if (g < 1) throw ConfigError("generator support yields no occurrences");
        const std::size_t needed = plant_anomaly ? 2 * g - 1 : 2 * g;
        if (needed > n_transactions) throw ConfigError("generator supports do not fit into the dataset");
    }
};

struct PlantedPattern {
    Itemset items;
    double target_support = 0.0;
};

struct GroundTruth {
    std::vector<PlantedPattern> planted;
    Itemset generator_a;
    Itemset generator_b;
    std::optional<std::size_t> anomaly_transaction_id;
};

struct SyntheticData {
    Dataset data;
    GroundTruth truth;
};

namespace detail {

// Transactions holding generator A only, B only, and the designated anomaly.
struct GeneratorPlacement {
    std::vector<std::size_t> a_only;
    std::vector<std::size_t> b_only;
    std::optional<std::size_t> designated;
};

inline GeneratorPlacement place_generators(const GeneratorConfig& cfg, Rng& rng) {
    const std::size_t g = cfg.generator_count();
    std::vector<std::size_t> perm(cfg.n_transactions);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    GeneratorPlacement p;
    std::size_t next = 0;
    std::size_t a_count = g;
    std::size_t b_count = g;
    if (cfg.plant_anomaly) {
        p.designated = perm[next++];
        --a_count;
        --b_count;
    }
    p.a_only.assign(perm.begin() + static_cast<std::ptrdiff_t>(next), perm.begin() + static_cast<std::ptrdiff_t>(next + a_count));
    next += a_count;
    p.b_only.assign(perm.begin() + static_cast<std::ptrdiff_t>(next), perm.begin() + static_cast<std::ptrdiff_t>(next + b_count));
    return p;
}

inline std::size_t draw_size(const GeneratorConfig& cfg, Rng& rng) { return rng.between(cfg.size_lo, cfg.size_hi); }

}  // namespace detail

/**
 * Transaction data with |P| random patterns and two anomaly generators.
 *
 * Generators are disjoint itemsets stamped into exactly round(g |D|)
 * transactions each; with `plant_anomaly` exactly one uniformly chosen
 * transaction holds both. Every transaction then receives each pattern of P
 * with probability equal to its target support and each absent item with
 * probability `singleton_noise`, except where an addition would make a
 * transaction other than the designated one contain both generators.
 */
inline SyntheticData generate_transaction_data(const GeneratorConfig& cfg) {
    if (cfg.kind != DataKind::transaction) throw ConfigError("configuration is not for transaction data");
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t m = cfg.alphabet_size;

    auto draw_itemset = [&](std::span<const ItemId> forbidden) {
        std::vector<ItemId> pool;
        for (ItemId i = 0; i < m; ++i) {
            if (!std::binary_search(forbidden.begin(), forbidden.end(), i)) pool.push_back(i);
        }
        const std::size_t size = detail::draw_size(cfg, rng);
        Itemset items;
        for (std::size_t k : rng.sample_without_replacement(pool.size(), size)) items.push_back(pool[k]);
        normalize(items);
        return items;
    };

    GroundTruth truth;
    std::set<Itemset> seen;
    while (truth.planted.size() < cfg.n_patterns) {
        Itemset items = draw_itemset({});
        const double target = rng.uniform(cfg.support_lo, cfg.support_hi);
        if (!seen.insert(items).second) continue;
        truth.planted.push_back({std::move(items), target});
    }
    do {
        truth.generator_a = draw_itemset({});
    } while (seen.count(truth.generator_a));
    seen.insert(truth.generator_a);
    do {
        truth.generator_b = draw_itemset(truth.generator_a);
    } while (seen.count(truth.generator_b));

    const std::size_t words = word_count(m);
    std::vector<Word> rows(cfg.n_transactions * words, 0);
    auto row = [&](std::size_t t) { return std::span<Word>(rows.data() + t * words, words); };
    auto mask_of = [&](const Itemset& items) {
        std::vector<Word> mask(words, 0);
        for (ItemId i : items) mask[i >> 6] |= Word{1} << (i & 63);
        return mask;
    };
    const auto mask_a = mask_of(truth.generator_a);
    const auto mask_b = mask_of(truth.generator_b);
    const auto mask_ab = mask_of(set_union(truth.generator_a, truth.generator_b));

    const auto placement = detail::place_generators(cfg, rng);
    auto stamp = [&](std::size_t t, const std::vector<Word>& mask) {
        auto r = row(t);
        for (std::size_t w = 0; w < words; ++w) r[w] |= mask[w];
    };
    if (placement.designated) {
        stamp(*placement.designated, mask_a);
        stamp(*placement.designated, mask_b);
        truth.anomaly_transaction_id = placement.designated;
    }
    for (std::size_t t : placement.a_only) stamp(t, mask_a);
    for (std::size_t t : placement.b_only) stamp(t, mask_b);

    std::vector<std::vector<Word>> pattern_masks;
    for (const auto& p : truth.planted) pattern_masks.push_back(mask_of(p.items));

    std::vector<Word> trial(words);
    for (std::size_t t = 0; t < cfg.n_transactions; ++t) {
        auto r = row(t);
        const bool designated = placement.designated && *placement.designated == t;
        for (std::size_t k = 0; k < truth.planted.size(); ++k) {
            if (!rng.bernoulli(truth.planted[k].target_support)) continue;
            for (std::size_t w = 0; w < words; ++w) trial[w] = r[w] | pattern_masks[k][w];
            if (!designated && words_subset(mask_ab, trial)) continue;
            std::copy(trial.begin(), trial.end(), r.begin());
        }
        for (ItemId i = 0; i < m; ++i) {
            const Word bit = Word{1} << (i & 63);
            if (r[i >> 6] & bit) continue;
            if (!rng.bernoulli(cfg.singleton_noise)) continue;
            std::copy(r.begin(), r.end(), trial.begin());
            trial[i >> 6] |= bit;
            if (!designated && words_subset(mask_ab, trial)) continue;
            r[i >> 6] |= bit;
        }
    }

    std::vector<Itemset> transactions(cfg.n_transactions);
    for (std::size_t t = 0; t < cfg.n_transactions; ++t) {
        auto r = row(t);
        for (ItemId i = 0; i < m; ++i) {
            if ((r[i >> 6] >> (i & 63)) & 1U) transactions[t].push_back(i);
        }
    }
    return {Dataset(std::move(transactions), m), std::move(truth)};
}

/**
 * Categorical data over |A| attributes with |Omega_i| values each; the value
 * j of attribute a is item a * |Omega_i| + j.
 *
 * Patterns fix the values of distinct attributes. Generators use disjoint
 * attribute sets and are placed as for transaction data. A pattern is added
 * to a transaction only when all of its attributes are still unspecified and
 * the addition does not complete both generators outside the designated
 * transaction; the remaining attributes are then filled uniformly at random
 * under the same restriction.
 */
inline SyntheticData generate_categorical_data(const GeneratorConfig& cfg) {
    if (cfg.kind != DataKind::categorical) throw ConfigError("configuration is not for categorical data");
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t na = cfg.n_attributes;
    const std::size_t dom = cfg.domain_size;
    constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();

    // A categorical pattern as (attribute, value) pairs sorted by attribute.
    using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;
    auto draw_assignment = [&](const std::set<std::size_t>& forbidden) {
        std::vector<std::size_t> pool;
        for (std::size_t a = 0; a < na; ++a) {
            if (!forbidden.count(a)) pool.push_back(a);
        }
        const std::size_t size = detail::draw_size(cfg, rng);
        Assignment out;
        for (std::size_t k : rng.sample_without_replacement(pool.size(), size)) out.emplace_back(pool[k], rng.index(dom));
        std::sort(out.begin(), out.end());
        return out;
    };
    auto items_of = [&](const Assignment& as) {
        Itemset items;
        for (auto [a, v] : as) items.push_back(static_cast<ItemId>(a * dom + v));
        return items;
    };

    GroundTruth truth;
    std::vector<Assignment> patterns;
    std::set<Itemset> seen;
    while (patterns.size() < cfg.n_patterns) {
        Assignment as = draw_assignment({});
        const double target = rng.uniform(cfg.support_lo, cfg.support_hi);
        Itemset items = items_of(as);
        if (!seen.insert(items).second) continue;
        truth.planted.push_back({std::move(items), target});
        patterns.push_back(std::move(as));
    }
    Assignment gen_a;
    Assignment gen_b;
    do {
        gen_a = draw_assignment({});
    } while (seen.count(items_of(gen_a)));
    seen.insert(items_of(gen_a));
    std::set<std::size_t> used_by_a;
    for (auto [a, v] : gen_a) used_by_a.insert(a);
    do {
        gen_b = draw_assignment(used_by_a);
    } while (seen.count(items_of(gen_b)));
    truth.generator_a = items_of(gen_a);
    truth.generator_b = items_of(gen_b);

    std::vector<std::size_t> values(cfg.n_transactions * na, kUnset);
    auto value = [&](std::size_t t, std::size_t a) -> std::size_t& { return values[t * na + a]; };
    auto holds = [&](std::size_t t, const Assignment& as) {
        return std::all_of(as.begin(), as.end(), [&](auto av) { return value(t, av.first) == av.second; });
    };
    auto holds_both = [&](std::size_t t) { return holds(t, gen_a) && holds(t, gen_b); };
    auto stamp = [&](std::size_t t, const Assignment& as) {
        for (auto [a, v] : as) value(t, a) = v;
    };

    const auto placement = detail::place_generators(cfg, rng);
    if (placement.designated) {
        stamp(*placement.designated, gen_a);
        stamp(*placement.designated, gen_b);
        truth.anomaly_transaction_id = placement.designated;
    }
    for (std::size_t t : placement.a_only) stamp(t, gen_a);
    for (std::size_t t : placement.b_only) stamp(t, gen_b);

    std::vector<std::size_t> filled;
    for (std::size_t t = 0; t < cfg.n_transactions; ++t) {
        const bool designated = placement.designated && *placement.designated == t;
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            if (!rng.bernoulli(truth.planted[k].target_support)) continue;
            const auto& as = patterns[k];
            const bool fits = std::all_of(as.begin(), as.end(), [&](auto av) { return value(t, av.first) == kUnset; });
            if (!fits) continue;
            stamp(t, as);
            if (!designated && holds_both(t)) {
                for (auto [a, v] : as) value(t, a) = kUnset;
            }
        }
        filled.clear();
        for (std::size_t a = 0; a < na; ++a) {
            if (value(t, a) == kUnset) filled.push_back(a);
        }
        do {
            for (std::size_t a : filled) value(t, a) = rng.index(dom);
        } while (!designated && !filled.empty() && holds_both(t));
    }

    std::vector<Attribute> schema(na);
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < na; ++a) {
        schema[a].name = "a" + std::to_string(a);
        schema[a].first_item = static_cast<ItemId>(a * dom);
        for (std::size_t v = 0; v < dom; ++v) {
            schema[a].values.push_back("v" + std::to_string(v));
            labels.push_back(schema[a].name + "=" + schema[a].values.back());
        }
    }
    std::vector<Itemset> transactions(cfg.n_transactions, Itemset(na));
    for (std::size_t t = 0; t < cfg.n_transactions; ++t) {
        for (std::size_t a = 0; a < na; ++a) transactions[t][a] = static_cast<ItemId>(a * dom + value(t, a));
    }
    return {Dataset(std::move(transactions), na * dom, std::move(schema), std::move(labels)), std::move(truth)};
}

inline SyntheticData generate(const GeneratorConfig& cfg) {
    return cfg.kind == DataKind::transaction ? generate_transaction_data(cfg) : generate_categorical_data(cfg);
}

/// Number of transactions containing both anomaly generators.
inline std::size_t generator_cooccurrences(const SyntheticData& s) {
    return s.data.support(set_union(s.truth.generator_a, s.truth.generator_b));
}

struct PowerPoint {
    double growth = 1.0;
    double cutoff = 0.0;  ///< -inf when every anomaly maximum counts as above
    double power = 0.0;
    std::vector<std::optional<double>> null_max;
    std::vector<std::optional<double>> anomaly_max;
};

/// Config for growth factor g: pattern supports [0.04g, 0.08g], generator support 0.16g.
inline GeneratorConfig scaled_config(GeneratorConfig cfg, double growth) {
    cfg.support_lo = 0.04 * growth;
    cfg.support_hi = 0.08 * growth;
    cfg.generator_support = 0.16 * growth;
    return cfg;
}

/**
 * Empirical (1 - alpha) point of the null maxima: the ceil((1 - alpha) n)-th
 * smallest value, or -inf when that rank is 0. Absent maxima count as -inf.
 */
inline double null_cutoff(std::span<const std::optional<double>> null_max, double alpha) {
    std::vector<double> sorted;
    for (const auto& m : null_max) sorted.push_back(m ? *m : -std::numeric_limits<double>::infinity());
    std::sort(sorted.begin(), sorted.end());
    const double raw = (1.0 - alpha) * static_cast<double>(sorted.size());
    const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    if (k == 0) return -std::numeric_limits<double>::infinity();
    return sorted[std::min(k, sorted.size()) - 1];
}

/**
 * Statistical power of the maximum class-2 score per growth factor: generates
 * `per_point` datasets without and with the planted co-occurrence, sets the
 * cutoff at the (1 - alpha) point of the null maxima and reports the fraction
 * of anomaly maxima strictly above it. Dataset seeds derive from base.seed.
 */
inline std::vector<PowerPoint> power_experiment(const GeneratorConfig& base, std::span<const double> growth_factors,
                                                std::size_t per_point, double alpha, unsigned threads = 1,
                                                const MdlOptions& mdl = {}) {
    if (per_point < 1) throw ConfigError("datasets per point must be at least 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    for (double g : growth_factors) scaled_config(base, g).validate();

    std::vector<PowerPoint> out(growth_factors.size());
    const std::size_t jobs_per_point = 2 * per_point;
    std::vector<std::optional<double>> maxima(growth_factors.size() * jobs_per_point);
    parallel_for(maxima.size(), threads, [&](unsigned, std::size_t job) {
        const std::size_t point = job / jobs_per_point;
        const std::size_t k = job % jobs_per_point;
        GeneratorConfig cfg = scaled_config(base, growth_factors[point]);
        cfg.plant_anomaly = (k % 2) == 1;
        cfg.seed = derive_seed(base.seed, point, k);
        const auto synth = generate(cfg);
        const auto scores = cooccurrence_scores(synth.data, mdl);
        std::optional<double> best;
        for (const auto& s : scores) {
            if (s && (!best || *s > *best)) best = s;
        }
        maxima[job] = best;
    });
    for (std::size_t p = 0; p < growth_factors.size(); ++p) {
        auto& pt = out[p];
        pt.growth = growth_factors[p];
        for (std::size_t k = 0; k < jobs_per_point; ++k) {
            const auto& m = maxima[p * jobs_per_point + k];
            (k % 2 == 1 ? pt.anomaly_max : pt.null_max).push_back(m);
        }
        pt.cutoff = null_cutoff(pt.null_max, alpha);
        std::size_t above = 0;
        for (const auto& m : pt.anomaly_max) {
            if (m && *m > pt.cutoff) ++above;
        }
        pt.power = static_cast<double>(above) / static_cast<double>(per_point);
    }
    return out;
}

}  // namespace bnb
