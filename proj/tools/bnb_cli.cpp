// bnb: mining, scoring, thresholds, significance, synthetic data and power
// curves from the command line. Every command writes into its own output
// directory and finishes with manifest.json; `bnb replay` reruns a manifest
// and compares output digests.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bnb/bnb.hpp"

#ifndef BNB_VERSION
#define BNB_VERSION "dev"
#endif

namespace fs = std::filesystem;
using bnb::json;

namespace {

constexpr int kExitFailure = 1;

std::string hex(const unsigned char* data, std::size_t n) {
    std::ostringstream s;
    for (std::size_t i = 0; i < n; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
    return s.str();
}

std::string sha256(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    return hex(digest, len);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("BNB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw bnb::ConfigError(std::string("BNB_SEED is not an unsigned integer: ") + env);
        }
    }
    return 0;
}

/// Collects outputs of one run; the manifest is written last and only on success.
class Run {
public:
    Run(std::string command, std::vector<std::string> arguments, const std::string& out_dir)
        : dir_(out_dir), command_(std::move(command)), arguments_(std::move(arguments)) {
        if (out_dir.empty()) throw bnb::ConfigError("--out is required");
        fs::create_directories(dir_);
    }

    const fs::path& dir() const { return dir_; }

    void input(const std::string& path) {
        inputs_.push_back({{"path", path}, {"absolute", fs::absolute(path).lexically_normal().string()},
                           {"sha256", sha256(read_file(path))}});
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        outputs_[name] = sha256(content);
    }

    void parameter(const std::string& key, json value) { parameters_[key] = std::move(value); }
    void seed(std::uint64_t s) { seed_ = s; }
    void timing(const std::string& phase, double secs) { timings_[phase] = secs; }
    void threads(unsigned n) { threads_ = n; }

    void finish() {
        json m;
        m["command"] = command_;
        m["arguments"] = arguments_;
        m["parameters"] = parameters_;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        m["seed"] = seed_ ? json(*seed_) : json(nullptr);
        m["rng"] = bnb::kRngAlgorithm;
        m["tool_version"] = BNB_VERSION;
        m["threads"] = threads_;
        m["timings_s"] = timings_;
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << '\n';
        out.close();
        if (!out) throw std::runtime_error("cannot write manifest");
    }

private:
    fs::path dir_;
    std::string command_;
    std::vector<std::string> arguments_;
    json inputs_ = json::array();
    std::map<std::string, std::string> outputs_;
    json parameters_ = json::object();
    std::optional<std::uint64_t> seed_;
    json timings_ = json::object();
    unsigned threads_ = 1;
};

struct InputOptions {
    std::string path;
    std::string format = "auto";
    bool no_header = false;
    std::string labels;
};

void add_input_options(CLI::App* cmd, InputOptions& in, bool required = true) {
    auto* opt = cmd->add_option("input", in.path, "Dataset file (.dat/.fimi: FIMI, .csv: categorical)");
    if (required) opt->required();
    opt->check(CLI::ExistingFile);
    cmd->add_option("--format", in.format, "Input format")->check(CLI::IsMember({"auto", "fimi", "csv"}));
    cmd->add_flag("--no-header", in.no_header, "CSV input has no header row");
    cmd->add_option("--labels", in.labels, "JSON item label table for FIMI input")->check(CLI::ExistingFile);
}

bnb::Dataset load_dataset(const InputOptions& in, Run& run) {
    std::string format = in.format;
    if (format == "auto") {
        const auto ext = fs::path(in.path).extension().string();
        if (ext == ".dat" || ext == ".fimi") {
            format = "fimi";
        } else if (ext == ".csv") {
            format = "csv";
        } else {
            throw bnb::ConfigError("cannot infer the format of '" + in.path + "'; pass --format fimi|csv");
        }
    }
    run.input(in.path);
    run.parameter("format", format);
    std::ifstream file(in.path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot read " + in.path);
    bnb::Dataset d = format == "fimi" ? bnb::parse_fimi(file) : bnb::parse_categorical_csv(file, !in.no_header);
    if (!in.labels.empty()) {
        run.input(in.labels);
        d = bnb::with_labels(d, bnb::labels_from_json(json::parse(read_file(in.labels)), d.alphabet_size()));
    }
    return d;
}

struct MiningOptions {
    std::size_t min_support = 1;
    std::size_t growth_depth = bnb::MdlOptions{}.growth_depth;
    std::size_t choices = bnb::MdlOptions{}.choices;

    bnb::MdlOptions mdl() const { return {min_support, growth_depth, choices}; }
    json to_json() const { return {{"min_support", min_support}, {"growth_depth", growth_depth}, {"choices", choices}}; }
};

void add_mining_options(CLI::App* cmd, MiningOptions& m, bool with_minsup) {
    if (with_minsup) {
        cmd->add_option("--minsup", m.min_support, "Minimum support count of code table patterns")
            ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--growth-depth", m.growth_depth, "Items a code table candidate may be extended by");
    cmd->add_option("--choices", m.choices, "Improving candidates compared per mining round")
        ->check(CLI::PositiveNumber);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream s(text);
    std::string part;
    while (std::getline(s, part, ',')) {
        std::size_t used = 0;
        const double x = std::stod(part, &used);
        if (used != part.size()) throw bnb::ConfigError("not a number: " + part);
        out.push_back(x);
    }
    if (out.empty()) throw bnb::ConfigError("empty list");
    return out;
}

std::string render(const bnb::Itemset& items, const bnb::Dataset& d) { return bnb::render_itemset(items, d); }

// ---------------------------------------------------------------- mine

struct MineArgs {
    InputOptions in;
    std::string method = "mdl";
    double minsup = -1.0;
    MiningOptions mining;
    std::string out;
};

void cmd_mine(const MineArgs& a, Run& run) {
    const auto d = load_dataset(a.in, run);
    run.parameter("method", a.method);
    const auto start = std::chrono::steady_clock::now();
    bnb::PatternSet set;
    std::size_t size_s = 0;
    if (a.method == "mdl") {
        auto m = a.mining;
        if (a.minsup >= 0.0) {
            if (a.minsup < 1.0 || a.minsup != std::floor(a.minsup)) {
                throw bnb::ConfigError("--minsup for --method mdl is an absolute count >= 1");
            }
            m.min_support = static_cast<std::size_t>(a.minsup);
        }
        run.parameter("mining", m.to_json());
        const auto ct = bnb::mine_mdl(d, m.mdl());
        set = bnb::PatternSet::from_code_table(ct);
        size_s = ct.non_singletons().size();
        run.parameter("encoded_size_bits", ct.encoded_size());
    } else {
        const double fraction = a.minsup >= 0.0 ? a.minsup : 0.05;
        if (!(fraction > 0.0 && fraction <= 1.0)) throw bnb::ConfigError("--minsup for --method closed lies in (0, 1]");
        run.parameter("min_support_fraction", fraction);
        set = bnb::mine_closed(d, fraction);
        size_s = set.size();
    }
    const double secs = seconds_since(start);
    run.timing("mining", secs);
    run.write("patterns.json", bnb::patterns_to_json(set.patterns).dump() + "\n");
    std::cout << "|S| = " << size_s << (a.method == "mdl" ? " non-singleton patterns" : " closed patterns") << " ("
              << set.size() << " total), mining " << std::fixed << std::setprecision(3) << secs << " s\n";
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
    InputOptions in;
    std::string patterns;
    bool mine_inline = false;
    std::string classes = "2";
    MiningOptions mining;
    std::size_t top = 10;
    std::string out;
};

void cmd_score(const ScoreArgs& a, Run& run, unsigned threads) {
    const auto d = load_dataset(a.in, run);
    bnb::ClassSelection classes{};
    for (double c : parse_list(a.classes)) {
        if (c != 0.0 && c != 1.0 && c != 2.0) throw bnb::ConfigError("--classes takes values from 0,1,2");
        classes[static_cast<int>(c)] = true;
    }
    json chosen = json::array();
    for (int c = 0; c < 3; ++c) {
        if (classes[c]) chosen.push_back(c);
    }
    run.parameter("classes", chosen);
    const bool need_patterns = classes[1] || classes[2];
    if (need_patterns && a.patterns.empty() && !a.mine_inline) {
        throw bnb::ConfigError("classes 1 and 2 need a pattern set: pass --patterns FILE or --mine-inline");
    }

    std::optional<bnb::CodeTable> ct;
    std::optional<bnb::PatternSet> set;
    if (a.mine_inline && need_patterns) {
        run.parameter("mining", a.mining.to_json());
        const auto start = std::chrono::steady_clock::now();
        ct = bnb::mine_mdl(d, a.mining.mdl());
        run.timing("mining", seconds_since(start));
        set = bnb::PatternSet::from_code_table(*ct);
    } else if (!a.patterns.empty()) {
        run.input(a.patterns);
        auto ps = bnb::patterns_from_json(json::parse(read_file(a.patterns)));
        for (auto& p : ps) {
            for (bnb::ItemId i : p.items) d.check_item(i);
            p.support = d.support(p.items);
        }
        set = bnb::PatternSet(ps, bnb::PatternSource::explicit_set);
        if (classes[1]) {
            // Closed pattern sets carry no usages, so they cannot serve as a code table.
            try {
                ct = bnb::CodeTable(ps, d.alphabet_size());
            } catch (const bnb::DomainError& e) {
                throw bnb::ConfigError(std::string("class 1 needs a code table (") + e.what() +
                                       "); pass --mine-inline");
            }
            if (ct->total_usage() == 0) {
                throw bnb::ConfigError("class 1 needs a code table with usages, not a plain pattern set; "
                                       "pass --mine-inline or a file written by `bnb mine --method mdl`");
            }
        }
    }

    const auto start = std::chrono::steady_clock::now();
    const auto ranking = bnb::rank(d, set ? &*set : nullptr, ct ? &*ct : nullptr, classes, threads);
    run.timing("scoring", seconds_since(start));

    std::ostringstream jsonl;
    bnb::write_reports_jsonl(jsonl, ranking, d);
    run.write("report.jsonl", jsonl.str());
    std::ostringstream csv;
    bnb::write_ranking_csv(csv, ranking, d);
    run.write("ranking.csv", csv.str());
    if (set) run.write("patterns.json", bnb::patterns_to_json(set->patterns).dump() + "\n");

    const int primary = bnb::primary_class(ranking);
    if (primary < 0) return;
    std::cout << "top " << std::min(a.top, d.size()) << " by class " << primary << ":\n";
    for (std::size_t k = 0; k < std::min(a.top, d.size()); ++k) {
        const auto& r = ranking.reports[ranking.order[primary][k]];
        const auto& s = primary == 0 ? r.score0_bits : primary == 1 ? r.score1_bits : r.score2_bits;
        std::cout << std::setw(4) << k + 1 << "  t" << r.transaction_id << "  "
                  << (s ? bnb::format_double(*s) + " bits" : std::string("no eligible pair"));
        if (primary == 2 && r.explanation) {
            std::cout << "  " << render(r.explanation->pattern_a, d) << " x " << render(r.explanation->pattern_b, d);
        }
        std::cout << '\n';
    }
}

// ---------------------------------------------------------------- threshold

struct ThresholdArgs {
    InputOptions in;
    std::string scores;
    std::string fnr = "0.5,0.2,0.1,0.05";
    std::size_t replicates = 1000;
    bool reuse_patterns = false;
    MiningOptions mining;
    std::string out;
};

void cmd_threshold(const ThresholdArgs& a, Run& run, std::uint64_t seed, unsigned threads) {
    if (a.in.path.empty() == a.scores.empty()) throw bnb::ConfigError("pass either a dataset or --scores FILE");
    const auto rates = parse_list(a.fnr);
    bnb::ScoreDistribution dist;
    std::vector<double> observed;
    if (!a.scores.empty()) {
        run.input(a.scores);
        std::ifstream in(a.scores);
        dist = bnb::ScoreDistribution(bnb::read_samples_csv(in));
        observed.assign(dist.samples().begin(), dist.samples().end());
    } else {
        const auto d = load_dataset(a.in, run);
        bnb::BootstrapOptions opt;
        opt.replicates = a.replicates;
        opt.seed = seed;
        opt.reuse_patterns = a.reuse_patterns;
        opt.mdl = a.mining.mdl();
        opt.threads = threads;
        run.seed(seed);
        run.parameter("replicates", a.replicates);
        run.parameter("reuse_patterns", a.reuse_patterns);
        run.parameter("mining", a.mining.to_json());
        auto start = std::chrono::steady_clock::now();
        dist = bnb::bootstrap_all_scores(d, opt);
        run.timing("bootstrap", seconds_since(start));
        start = std::chrono::steady_clock::now();
        for (const auto& s : bnb::cooccurrence_scores(d, opt.mdl)) {
            if (s) observed.push_back(*s);
        }
        run.timing("scoring", seconds_since(start));
        std::ostringstream samples;
        bnb::write_samples_csv(samples, dist);
        run.write("samples.csv", samples.str());
        run.write("summary.json", bnb::distribution_summary(dist, seed, a.replicates, false).dump(2) + "\n");
    }
    run.parameter("fnr", rates);
    if (dist.degenerate()) {
        throw bnb::DegenerateDistribution("score distribution is degenerate (" + std::to_string(dist.size()) +
                                          " samples, zero spread); no threshold exists");
    }
    std::ostringstream table;
    table << "fnr,k,theta,above\n";
    std::cout << "mean " << bnb::format_double(dist.mean()) << "  stddev " << bnb::format_double(dist.stddev()) << "  n "
              << dist.size() << "\n  fnr        k    theta  above\n";
    for (double fnr : rates) {
        const double k = bnb::cantelli_k(fnr);
        const double theta = bnb::cantelli_threshold(dist, fnr);
        std::size_t above = 0;
        for (double x : observed) above += x > theta ? 1 : 0;
        table << bnb::format_double(fnr) << ',' << bnb::format_double(k) << ',' << bnb::format_double(theta) << ','
              << above << '\n';
        std::cout << std::fixed << std::setprecision(3) << std::setw(5) << fnr << std::setw(9) << k << std::setw(9)
                  << theta << std::setw(7) << above << '\n';
    }
    run.write("thresholds.csv", table.str());
}

// ---------------------------------------------------------------- significance

struct SignificanceArgs {
    InputOptions in;
    std::size_t replicates = 1000;
    bool reuse_patterns = false;
    MiningOptions mining;
    std::string out;
};

void cmd_significance(const SignificanceArgs& a, Run& run, std::uint64_t seed, unsigned threads) {
    const auto d = load_dataset(a.in, run);
    if (d.size() < 2) throw bnb::ConfigError("significance testing needs at least 2 transactions");
    bnb::BootstrapOptions opt;
    opt.replicates = a.replicates;
    opt.seed = seed;
    opt.reuse_patterns = a.reuse_patterns;
    opt.mdl = a.mining.mdl();
    opt.threads = threads;
    run.seed(seed);
    run.parameter("replicates", a.replicates);
    run.parameter("reuse_patterns", a.reuse_patterns);
    run.parameter("mining", a.mining.to_json());
    const auto start = std::chrono::steady_clock::now();
    const auto r = bnb::significance_test(d, opt);
    run.timing("bootstrap", seconds_since(start));
    std::ostringstream with;
    std::ostringstream without;
    bnb::write_samples_csv(with, r.dist_with);
    bnb::write_samples_csv(without, r.dist_without);
    run.write("samples_with.csv", with.str());
    run.write("samples_without.csv", without.str());
    json summary = {{"with", bnb::distribution_summary(r.dist_with, seed, a.replicates, false)},
                    {"without", bnb::distribution_summary(r.dist_without, seed, a.replicates, true)},
                    {"mean_difference", r.mean_difference},
                    {"overlap_fraction", r.overlap_fraction}};
    run.write("summary.json", summary.dump(2) + "\n");
    std::cout << "mean with top " << bnb::format_double(r.dist_with.mean()) << ", without top "
              << bnb::format_double(r.dist_without.mean()) << ", difference " << bnb::format_double(r.mean_difference)
              << ", overlap " << bnb::format_double(r.overlap_fraction) << '\n';
}

// ---------------------------------------------------------------- synth and power

struct GeneratorArgs {
    std::string config;
    std::string kind;
    std::size_t transactions = 0;
    std::size_t alphabet = 0;
    std::size_t attributes = 0;
    std::size_t domain = 0;
    std::size_t patterns = 0;
    std::vector<double> support;
    std::vector<std::size_t> size;
    double generator_support = 0.0;
    double noise = -1.0;
    bool no_anomaly = false;
};

void add_generator_options(CLI::App* cmd, GeneratorArgs& g) {
    cmd->add_option("--config", g.config, "Generator configuration JSON")->check(CLI::ExistingFile);
    cmd->add_option("--kind", g.kind, "Data kind")->check(CLI::IsMember({"transaction", "categorical"}));
    cmd->add_option("--transactions", g.transactions, "|D|")->check(CLI::PositiveNumber);
    cmd->add_option("--alphabet", g.alphabet, "|Omega| for transaction data")->check(CLI::PositiveNumber);
    cmd->add_option("--attributes", g.attributes, "|A| for categorical data")->check(CLI::PositiveNumber);
    cmd->add_option("--domain", g.domain, "Values per attribute for categorical data")->check(CLI::PositiveNumber);
    cmd->add_option("--patterns", g.patterns, "|P|");
    cmd->add_option("--support", g.support, "Pattern support range LO HI")->expected(2);
    cmd->add_option("--size", g.size, "Pattern size range LO HI")->expected(2);
    cmd->add_option("--generator-support", g.generator_support, "Support of each anomaly generator");
    cmd->add_option("--noise", g.noise, "Singleton noise probability (transaction data)");
    cmd->add_flag("--no-anomaly", g.no_anomaly, "Never let the generators co-occur");
}

bnb::GeneratorConfig build_config(const GeneratorArgs& g, std::uint64_t seed, Run& run, bnb::GeneratorConfig base = {}) {
    if (!g.config.empty()) {
        run.input(g.config);
        base = bnb::config_from_json(json::parse(read_file(g.config)), base);
    }
    if (!g.kind.empty()) base.kind = g.kind == "transaction" ? bnb::DataKind::transaction : bnb::DataKind::categorical;
    if (g.transactions) base.n_transactions = g.transactions;
    if (g.alphabet) base.alphabet_size = g.alphabet;
    if (g.attributes) base.n_attributes = g.attributes;
    if (g.domain) base.domain_size = g.domain;
    if (g.patterns) base.n_patterns = g.patterns;
    if (g.support.size() == 2) {
        base.support_lo = g.support[0];
        base.support_hi = g.support[1];
    }
    if (g.size.size() == 2) {
        base.size_lo = g.size[0];
        base.size_hi = g.size[1];
    }
    if (g.generator_support > 0.0) base.generator_support = g.generator_support;
    if (g.noise >= 0.0) base.singleton_noise = g.noise;
    if (g.no_anomaly) base.plant_anomaly = false;
    base.seed = seed;
    base.validate();
    run.seed(seed);
    run.parameter("config", bnb::config_to_json(base));
    return base;
}

void cmd_synth(const GeneratorArgs& g, Run& run, std::uint64_t seed) {
    const auto cfg = build_config(g, seed, run);
    const auto s = bnb::generate(cfg);
    std::ostringstream data;
    std::string name;
    if (cfg.kind == bnb::DataKind::transaction) {
        bnb::write_fimi(data, s.data);
        name = "data.dat";
    } else {
        bnb::write_categorical_csv(data, s.data);
        name = "data.csv";
    }
    run.write(name, data.str());
    run.write("ground_truth.json", bnb::ground_truth_to_json(s, cfg).dump(2) + "\n");
    run.write("config.json", bnb::config_to_json(cfg).dump(2) + "\n");
    std::cout << "wrote " << (run.dir() / name).string() << ": " << s.data.size() << " transactions";
    if (s.truth.anomaly_transaction_id) std::cout << ", anomaly at t" << *s.truth.anomaly_transaction_id;
    std::cout << '\n';
}

struct PowerArgs {
    GeneratorArgs gen;
    std::string growth = "1:2:5";
    std::size_t per_point = 20;
    double alpha = 0.05;
    MiningOptions mining;
    std::string out;
};

std::vector<double> parse_growth(const std::string& text) {
    std::vector<double> parts;
    std::stringstream s(text);
    std::string part;
    while (std::getline(s, part, ':')) parts.push_back(std::stod(part));
    if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2])) {
        throw bnb::ConfigError("--growth expects lo:hi:steps with an integer step count >= 1");
    }
    const auto steps = static_cast<std::size_t>(parts[2]);
    std::vector<double> out;
    for (std::size_t i = 0; i < steps; ++i) {
        out.push_back(steps == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * static_cast<double>(i) /
                                                             static_cast<double>(steps - 1));
    }
    return out;
}

void cmd_power(const PowerArgs& a, Run& run, std::uint64_t seed, unsigned threads) {
    bnb::GeneratorConfig power_default;
    power_default.alphabet_size = 25;
    const auto base = build_config(a.gen, seed, run, power_default);
    const auto growth = parse_growth(a.growth);
    run.parameter("growth", growth);
    run.parameter("per_point", a.per_point);
    run.parameter("alpha", a.alpha);
    run.parameter("mining", a.mining.to_json());
    const auto start = std::chrono::steady_clock::now();
    const auto curve = bnb::power_experiment(base, growth, a.per_point, a.alpha, threads, a.mining.mdl());
    run.timing("experiment", seconds_since(start));
    std::ostringstream table;
    std::ostringstream maxima;
    table << "growth,support_lo,support_hi,generator_support,cutoff,power\n";
    maxima << "growth,dataset,anomaly,max_score\n";
    std::cout << "growth   cutoff   power\n";
    for (const auto& pt : curve) {
        const auto cfg = bnb::scaled_config(base, pt.growth);
        table << bnb::format_double(pt.growth) << ',' << bnb::format_double(cfg.support_lo) << ','
              << bnb::format_double(cfg.support_hi) << ',' << bnb::format_double(cfg.generator_support) << ','
              << bnb::format_double(pt.cutoff) << ',' << bnb::format_double(pt.power) << '\n';
        for (std::size_t k = 0; k < pt.null_max.size(); ++k) {
            const auto& m = pt.null_max[k];
            maxima << bnb::format_double(pt.growth) << ',' << k << ",0," << (m ? bnb::format_double(*m) : "none") << '\n';
        }
        for (std::size_t k = 0; k < pt.anomaly_max.size(); ++k) {
            const auto& m = pt.anomaly_max[k];
            maxima << bnb::format_double(pt.growth) << ',' << k << ",1," << (m ? bnb::format_double(*m) : "none") << '\n';
        }
        std::cout << std::fixed << std::setprecision(3) << std::setw(6) << pt.growth << std::setw(9) << pt.cutoff
                  << std::setw(8) << pt.power << '\n';
    }
    run.write("power.csv", table.str());
    run.write("maxima.csv", maxima.str());
}

// ---------------------------------------------------------------- app

int run_app(std::vector<std::string> args);

struct Globals {
    unsigned threads = bnb::default_threads();
    std::uint64_t seed = 0;
};

int replay(const std::string& manifest_path, const std::string& out) {
    const json m = json::parse(read_file(manifest_path));
    for (const auto& in : m.at("inputs")) {
        const std::string path = in.at("absolute");
        if (sha256(read_file(path)) != in.at("sha256").get<std::string>()) {
            std::cerr << "input changed since the recorded run: " << path << '\n';
            return kExitFailure;
        }
    }
    std::vector<std::string> args = m.at("arguments");
    // Inputs are addressed by absolute path so the replay may run from anywhere.
    for (auto& arg : args) {
        for (const auto& in : m.at("inputs")) {
            if (arg == in.at("path").get<std::string>()) arg = in.at("absolute").get<std::string>();
        }
    }
    args.push_back("--out");
    args.push_back(out);
    const int code = run_app(args);
    if (code != 0) return code;
    const json fresh = json::parse(read_file(fs::path(out) / "manifest.json"));
    bool same = fresh.at("outputs") == m.at("outputs");
    for (const auto& [name, digest] : m.at("outputs").items()) {
        const bool ok = fresh.at("outputs").contains(name) && fresh.at("outputs").at(name) == digest;
        std::cout << (ok ? "identical  " : "DIFFERENT  ") << name << '\n';
    }
    std::cout << (same ? "replay reproduced every output\n" : "replay outputs differ\n");
    return same ? 0 : kExitFailure;
}

int run_app(std::vector<std::string> args) {
    CLI::App app{"Anomalous co-occurrence detection in transaction and categorical data", "bnb"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(BNB_VERSION));
    Globals g;
    g.seed = default_seed();
    app.add_option("--threads", g.threads, "Worker threads (default: available parallelism)")
        ->check(CLI::PositiveNumber);

    auto add_seed = [&](CLI::App* cmd) {
        return cmd->add_option("--seed", g.seed, "RNG seed (default: $BNB_SEED or 0)");
    };
    auto add_out = [&](CLI::App* cmd, std::string& out) {
        cmd->add_option("--out", out, "Output directory")->required();
    };

    MineArgs mine;
    auto* c_mine = app.add_subcommand("mine", "Mine a pattern set (MDL code table or closed itemsets)");
    add_input_options(c_mine, mine.in);
    c_mine->add_option("--method", mine.method, "Miner")->check(CLI::IsMember({"mdl", "closed"}));
    c_mine->add_option("--minsup", mine.minsup, "mdl: support count (default 1); closed: fraction (default 0.05)")
        ->check(CLI::PositiveNumber);
    add_mining_options(c_mine, mine.mining, false);
    add_out(c_mine, mine.out);

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "Score and rank transactions");
    add_input_options(c_score, score.in);
    auto* o_pat = c_score->add_option("--patterns", score.patterns, "Pattern set JSON")->check(CLI::ExistingFile);
    c_score->add_flag("--mine-inline", score.mine_inline, "Mine the MDL code table from the input")->excludes(o_pat);
    c_score->add_option("--classes", score.classes, "Comma-separated anomaly classes among 0,1,2");
    c_score->add_option("--top", score.top, "Transactions to print");
    add_mining_options(c_score, score.mining, true);
    add_out(c_score, score.out);

    ThresholdArgs thr;
    auto* c_thr = app.add_subcommand("threshold", "Cantelli decision thresholds from bootstrapped scores");
    add_input_options(c_thr, thr.in, false);
    c_thr->add_option("--scores", thr.scores, "Score samples CSV instead of a dataset")->check(CLI::ExistingFile);
    c_thr->add_option("--fnr", thr.fnr, "Comma-separated false-negative rates");
    c_thr->add_option("--replicates", thr.replicates, "Bootstrap replicates")->check(CLI::PositiveNumber);
    c_thr->add_flag("--reuse-patterns", thr.reuse_patterns, "Score replicates with the original pattern set");
    add_mining_options(c_thr, thr.mining, true);
    add_seed(c_thr);
    add_out(c_thr, thr.out);

    SignificanceArgs sig;
    auto* c_sig = app.add_subcommand("significance", "Bootstrap maxima with and without the top transaction");
    add_input_options(c_sig, sig.in);
    c_sig->add_option("--replicates", sig.replicates, "Bootstrap replicates")->check(CLI::PositiveNumber);
    c_sig->add_flag("--reuse-patterns", sig.reuse_patterns, "Score replicates with the original pattern set");
    add_mining_options(c_sig, sig.mining, true);
    add_seed(c_sig);
    add_out(c_sig, sig.out);

    GeneratorArgs syn;
    std::string syn_out;
    auto* c_syn = app.add_subcommand("synth", "Generate synthetic data with a planted co-occurrence");
    add_generator_options(c_syn, syn);
    add_seed(c_syn);
    add_out(c_syn, syn_out);

    PowerArgs pow;
    auto* c_pow = app.add_subcommand("power", "Statistical power curve over pattern support growth");
    add_generator_options(c_pow, pow.gen);
    c_pow->add_option("--growth", pow.growth, "Growth factors lo:hi:steps");
    c_pow->add_option("--n-per-point", pow.per_point, "Null and anomaly datasets per point")
        ->check(CLI::PositiveNumber);
    c_pow->add_option("--alpha", pow.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    add_mining_options(c_pow, pow.mining, true);
    add_seed(c_pow);
    add_out(c_pow, pow.out);

    std::string manifest;
    std::string replay_dir;
    auto* c_rep = app.add_subcommand("replay", "Rerun a manifest and compare output digests");
    c_rep->add_option("manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    c_rep->add_option("--out", replay_dir, "Output directory for the rerun")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_rep->parsed()) return replay(manifest, replay_dir);

        // Recorded arguments pin the seed so a replay does not depend on the environment.
        std::vector<std::string> recorded;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out") {
                ++i;
                continue;
            }
            if (args[i].rfind("--out=", 0) == 0) continue;
            recorded.push_back(args[i]);
        }
        CLI::App* cmd = app.get_subcommands().front();
        if (cmd->get_option_no_throw("--seed") && cmd->count("--seed") == 0) {
            recorded.push_back("--seed");
            recorded.push_back(std::to_string(g.seed));
        }

        if (c_mine->parsed()) {
            Run run("mine", recorded, mine.out);
            run.threads(g.threads);
            cmd_mine(mine, run);
            run.finish();
        } else if (c_score->parsed()) {
            Run run("score", recorded, score.out);
            run.threads(g.threads);
            cmd_score(score, run, g.threads);
            run.finish();
        } else if (c_thr->parsed()) {
            Run run("threshold", recorded, thr.out);
            run.threads(g.threads);
            cmd_threshold(thr, run, g.seed, g.threads);
            run.finish();
        } else if (c_sig->parsed()) {
            Run run("significance", recorded, sig.out);
            run.threads(g.threads);
            cmd_significance(sig, run, g.seed, g.threads);
            run.finish();
        } else if (c_syn->parsed()) {
            Run run("synth", recorded, syn_out);
            run.threads(g.threads);
            cmd_synth(syn, run, g.seed);
            run.finish();
        } else if (c_pow->parsed()) {
            Run run("power", recorded, pow.out);
            run.threads(g.threads);
            cmd_power(pow, run, g.seed, g.threads);
            run.finish();
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_app(args);
}
