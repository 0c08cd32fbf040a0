#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crest.hpp"

namespace crest {

namespace fs = std::filesystem;

struct ExperimentConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    Mode mode = Mode::easy;
    /// Each generated game draws its quest length uniformly from this list.
    std::vector<int> quest_lengths{5};
    int n_train = 10;
    int n_val = 20;
    int n_test = 20;
    TrainSchedule schedule;
    EnvOptions env;
    double threshold = 0.5;
    std::string embeddings = "data/embeddings/bundled-50d.txt";
    std::string embedding_name = "bundled";
    Architecture arch;
    std::vector<int> zero_shot_lengths;
    std::vector<double> sweep_thresholds{0.0, 0.3, 0.5, 0.7, 0.9};
    CommandGrammar grammar = CommandGrammar::standard();

    void validate() const {
        if (seeds.empty()) throw ContractError("config: no seeds");
        if (quest_lengths.empty()) throw ContractError("config: no quest lengths");
        if (n_train <= 0) throw ContractError("config: n_train must be positive");
        if (threshold < 0.0 || threshold > 1.0) throw ContractError("config: threshold must lie in [0, 1]");
        for (double t : sweep_thresholds)
            if (t < 0.0 || t > 1.0) throw ContractError("config: sweep thresholds must lie in [0, 1]");
        schedule.validate();
        grammar.validate();
    }
};

inline void to_json(nlohmann::json& j, const EnvOptions& e) {
    j = {{"max_steps", e.max_steps}, {"flavor_min", e.render.flavor_min}, {"flavor_max", e.render.flavor_max}};
}

inline void from_json(const nlohmann::json& j, EnvOptions& e) {
    EnvOptions d;
    e.max_steps = j.value("max_steps", d.max_steps);
    e.render.flavor_min = j.value("flavor_min", d.render.flavor_min);
    e.render.flavor_max = j.value("flavor_max", d.render.flavor_max);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"seeds", c.seeds},
         {"mode", to_string(c.mode)},
         {"quest_lengths", c.quest_lengths},
         {"n_train", c.n_train},
         {"n_val", c.n_val},
         {"n_test", c.n_test},
         {"schedule", c.schedule},
         {"env", c.env},
         {"threshold", c.threshold},
         {"embeddings", c.embeddings},
         {"embedding_name", c.embedding_name},
         {"architecture", c.arch},
         {"zero_shot_lengths", c.zero_shot_lengths},
         {"sweep_thresholds", c.sweep_thresholds},
         {"grammar", c.grammar}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    ExperimentConfig d;
    c.seeds = j.value("seeds", d.seeds);
    c.mode = parse_mode(j.value("mode", std::string(to_string(d.mode))));
    c.quest_lengths = j.value("quest_lengths", d.quest_lengths);
    c.n_train = j.value("n_train", d.n_train);
    c.n_val = j.value("n_val", d.n_val);
    c.n_test = j.value("n_test", d.n_test);
    c.schedule = j.contains("schedule") ? j.at("schedule").get<TrainSchedule>() : d.schedule;
    c.env = j.contains("env") ? j.at("env").get<EnvOptions>() : d.env;
    c.threshold = j.value("threshold", d.threshold);
    c.embeddings = j.value("embeddings", d.embeddings);
    c.embedding_name = j.value("embedding_name", d.embedding_name);
    c.arch = j.contains("architecture") ? j.at("architecture").get<Architecture>() : d.arch;
    c.zero_shot_lengths = j.value("zero_shot_lengths", d.zero_shot_lengths);
    c.sweep_thresholds = j.value("sweep_thresholds", d.sweep_thresholds);
    c.grammar = j.contains("grammar") ? j.at("grammar").get<CommandGrammar>() : d.grammar;
}

inline ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    ExperimentConfig c = nlohmann::json::parse(in).get<ExperimentConfig>();
    c.validate();
    return c;
}

inline std::string config_digest(const ExperimentConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash_text(nlohmann::json(c).dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// Games.

enum class Split : std::uint64_t { train = 0, val = 1, test = 2, transfer = 3 };

/// World seeds encode (master seed, split, length override, index) in disjoint bit ranges, so
/// train/validation/test games can never coincide.
inline std::uint64_t world_seed(std::uint64_t master, Split split, int index, int length_override = 0) {
    return (master << 32) | (static_cast<std::uint64_t>(split) << 28) |
           (static_cast<std::uint64_t>(length_override) << 20) | static_cast<std::uint64_t>(index);
}

using World = std::shared_ptr<const WorldGraph>;

inline std::vector<World> make_worlds(const ExperimentConfig& cfg, std::uint64_t master, Split split, int count,
                                      int fixed_length = 0) {
    std::vector<World> out;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t ws = world_seed(master, split, i, fixed_length);
        int L = fixed_length;
        if (L == 0) {
            Rng r(derive_seed(ws, "quest-length"));
            L = cfg.quest_lengths[r.index(cfg.quest_lengths.size())];
        }
        out.push_back(std::make_shared<WorldGraph>(generate_world(cfg.mode, L, ws)));
    }
    return out;
}

struct GameSets {
    std::vector<World> train, val, test;
};

inline GameSets make_game_sets(const ExperimentConfig& cfg, std::uint64_t master) {
    GameSets g{make_worlds(cfg, master, Split::train, cfg.n_train), make_worlds(cfg, master, Split::val, cfg.n_val),
               make_worlds(cfg, master, Split::test, cfg.n_test)};
    std::set<std::uint64_t> seen;
    for (const auto* set : {&g.train, &g.val, &g.test})
        for (const auto& w : *set)
            if (!seen.insert(w->seed).second) throw ContractError("train/val/test world seeds overlap");
    return g;
}

inline std::vector<GameView> views(const std::vector<World>& worlds, const TokenFilter& filter = {}) {
    std::vector<GameView> v;
    for (const auto& w : worlds) v.push_back({w, filter});
    return v;
}

/// Every token sequence the agent can observe in `games` (goal, each room, victory text).
inline std::vector<TokenList> observable_corpus(const std::vector<GameView>& games, const EnvOptions& env_opts) {
    std::vector<TokenList> corpus;
    for (const auto& g : games) {
        TextEnv env(*g.world, TemplatePools::builtin(), env_opts);
        corpus.push_back(tokenize(env.goal()));
        std::vector<std::string> texts = env.room_texts();
        texts.push_back(env.victory_text());
        for (const auto& t : texts) {
            TokenList toks = tokenize(t);
            corpus.push_back(g.filter ? g.filter(toks) : toks);
        }
    }
    return corpus;
}

inline Policy make_policy(const Architecture& arch, Vocabulary vocab, const CommandGrammar& grammar,
                          std::uint64_t seed) {
    Policy p;
    p.net = PolicyNetwork(arch, vocab.size());
    Rng init(derive_seed(seed, "init"));
    p.net.initialize(init);
    p.vocab = std::move(vocab);
    p.grammar = grammar;
    return p;
}

// ---------------------------------------------------------------------------
// Artifacts.

inline void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(1) + "\n"); }

inline nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(read_text(path)); }

inline std::string fmt(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

using Logger = std::function<void(const std::string&)>;

inline Logger stderr_logger() {
    return [](const std::string& s) { std::cerr << s << std::endl; };
}

/// Runs `fn`, rethrowing any failure prefixed with the stage name.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw Error("stage '" + stage + "' failed: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Pipeline stages.

struct TrainedPolicy {
    Policy policy;
    TrainResult result;
};

inline TrainedPolicy train_phase(const ExperimentConfig& cfg, const std::vector<GameView>& train_games,
                                 const std::vector<GameView>& val_games, std::uint64_t seed, const fs::path& dir,
                                 const Logger& log, const std::string& tag) {
    Vocabulary vocab = Vocabulary::from_tokens(observable_corpus(train_games, cfg.env));
    Policy init = make_policy(cfg.arch, std::move(vocab), cfg.grammar, seed);
    TrainOptions opts;
    opts.schedule = cfg.schedule;
    opts.env = cfg.env;
    opts.seed = seed;
    if (log)
        opts.on_eval = [&](const MetricsRow& r) {
            log("  [" + tag + "] epoch " + std::to_string(r.epoch) + " eps " + fmt(r.epsilon, 3) + " loss " +
                fmt(r.loss, 5) + " train " + fmt(r.train_success, 2) + " val " + fmt(r.val_success, 2));
        };
    TrainResult res = train(train_games, val_games, init, opts);
    if (!dir.empty()) {
        write_json(dir / "checkpoint.json", res.best.to_json());
        write_json(dir / "fitted_checkpoint.json", res.fitted.to_json());
        write_text(dir / "metrics.csv", metrics_csv(res.metrics));
        write_json(dir / "vocab.json", res.best.vocab.to_json());
    }
    return {res.best, std::move(res)};
}

/// A configured embedding path that does not exist is also looked up by file name in the
/// embeddings directory (CREST_EMBEDDINGS_DIR when set).
inline fs::path resolve_embeddings(const fs::path& configured) {
    if (fs::exists(configured)) return configured;
    const fs::path alt = embeddings_dir("data/embeddings") / configured.filename();
    return fs::exists(alt) ? alt : configured;
}

inline std::shared_ptr<const EmbeddingTable> load_table(const ExperimentConfig& cfg) {
    fs::path p = resolve_embeddings(cfg.embeddings);
    if (!fs::exists(p))
        throw ParseError("embedding file '" + p.string() +
                         "' not found; pass --embeddings <path> or set \"embeddings\" in the config");
    auto table = std::make_shared<EmbeddingTable>(load_embeddings(p, std::nullopt, cfg.embedding_name));
    table->require_tokens(cfg.grammar.all_tokens());
    return table;
}

/// Per-game pruned views for training, G-pruned views for evaluation.
struct PrunedViews {
    std::vector<GameView> train;
    TokenFilter global;
};

inline PrunedViews pruned_views(const std::vector<World>& train, const RelevanceScopes& scopes, double threshold) {
    PrunedViews v;
    for (std::size_t g = 0; g < train.size(); ++g)
        v.train.push_back({train[g], pruning_filter(scopes.per_game.at(g), threshold)});
    v.global = pruning_filter(scopes.global, threshold);
    return v;
}

inline std::string crest_label(const ExperimentConfig& cfg) {
    return "CREST(" + cfg.embedding_name + (cfg.arch.use_attention ? "+att" : "+no att") + ")";
}

struct ResultRecord {
    ResultRecord() = default;
    ResultRecord(std::string m, std::string digest) : method(std::move(m)), config_digest(std::move(digest)) {}

    std::string method;
    std::string config_digest;
    std::vector<std::uint64_t> seeds;
    std::vector<double> val_success;
    std::vector<double> test_success;
    double threshold = -1.0;  // bootstrapped rows only
    int quest_length = 0;     // zero-shot rows only

    static double mean(const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }
    double mean_val() const { return mean(val_success); }
    double mean_test() const { return mean(test_success); }
};

inline nlohmann::json to_json(const ResultRecord& r) {
    nlohmann::json j{{"method", r.method},           {"config_digest", r.config_digest},
                     {"seeds", r.seeds},             {"val_success", r.val_success},
                     {"test_success", r.test_success}, {"mean_val_success", r.mean_val()},
                     {"mean_test_success", r.mean_test()}};
    if (r.threshold >= 0) j["threshold"] = r.threshold;
    if (r.quest_length > 0) j["quest_length"] = r.quest_length;
    return j;
}

inline std::string records_csv(const std::vector<ResultRecord>& records) {
    std::string out = "method,threshold,quest_length,seeds,val_success,test_success,mean_val_success,mean_test_success\n";
    for (const auto& r : records) {
        std::string seeds, val, test;
        for (std::size_t i = 0; i < r.seeds.size(); ++i) {
            seeds += (i ? ";" : "") + std::to_string(r.seeds[i]);
            val += (i ? ";" : "") + fmt(r.val_success[i]);
            test += (i ? ";" : "") + fmt(r.test_success[i]);
        }
        out += "\"" + r.method + "\"," + (r.threshold >= 0 ? fmt(r.threshold, 2) : "") + "," +
               (r.quest_length > 0 ? std::to_string(r.quest_length) : "") + "," + seeds + "," + val + "," + test +
               "," + fmt(r.mean_val()) + "," + fmt(r.mean_test()) + "\n";
    }
    return out;
}

/// Output of one seed of the two-phase pipeline.
struct SeedRun {
    std::uint64_t seed = 0;
    GameSets games;
    TrainedPolicy base;
    EataCollection eata;
    RelevanceScopes scopes;
    double base_val = 0, base_test = 0;
    struct Boot {
        double threshold;
        TrainedPolicy trained;
        double val = 0, test = 0;
    };
    std::vector<Boot> boots;
};

inline double success(const Policy& p, const std::vector<World>& worlds, const TokenFilter& filter,
                      const EnvOptions& env) {
    return evaluate_policy(p, views(worlds, filter), env).success_rate;
}

/// generate -> train base -> EATA (from the base parameters that fit the training games best)
/// -> prune (per-game scope) -> train bootstrapped per threshold
/// -> evaluate. Artifacts go under out/seed_<seed>/.
inline SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::vector<double>& thresholds,
                        const fs::path& out, const Logger& log = {}) {
    SeedRun run;
    run.seed = seed;
    const fs::path dir = out.empty() ? fs::path{} : out / ("seed_" + std::to_string(seed));
    auto sub = [&](const std::string& name) { return dir.empty() ? fs::path{} : dir / name; };

    run.games = run_stage("generate", [&] { return make_game_sets(cfg, seed); });
    if (!dir.empty()) {
        nlohmann::json worlds = nlohmann::json::object();
        for (auto [name, set] : {std::pair{"train", &run.games.train}, std::pair{"val", &run.games.val},
                                 std::pair{"test", &run.games.test}}) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& w : *set) arr.push_back(world_to_json(*w));
            worlds[name] = arr;
        }
        write_json(dir / "games.json", worlds);
    }

    if (log) log("seed " + std::to_string(seed) + ": training base " + cfg.arch.label());
    run.base = run_stage("train-base", [&] {
        return train_phase(cfg, views(run.games.train), views(run.games.val), derive_seed(seed, "base"), sub("base"),
                           log, "base");
    });

    run.eata = run_stage("collect-eata", [&] {
        EataCollection c = collect_eata(run.base.result.fitted, views(run.games.train), cfg.env);
        if (!dir.empty()) write_json(dir / "eata.json", eata_to_json(c));
        return c;
    });
    if (log && !run.eata.rejects.empty())
        log("  warning: base policy failed " + std::to_string(run.eata.rejects.size()) +
            " training game(s); their action tokens are used anyway");

    auto table = run_stage("prune", [&] { return load_table(cfg); });
    run.scopes = build_scopes(run.eata.per_game, table);

    run.base_val = success(run.base.policy, run.games.val, {}, cfg.env);
    run.base_test = success(run.base.policy, run.games.test, {}, cfg.env);

    for (double th : thresholds) {
        const std::string tag = "boot@" + fmt(th, 2);
        const fs::path bdir = dir.empty() ? fs::path{} : dir / ("bootstrapped_th" + fmt(th, 2));
        run_stage("prune", [&] {
            if (!bdir.empty())
                write_text(bdir / "pruned_corpus.jsonl",
                           corpus_to_jsonl(prune_corpus(views(run.games.train), run.eata.trajectories, run.scopes, th,
                                                        ScopeKind::per_game)));
            return 0;
        });
        PrunedViews pv = pruned_views(run.games.train, run.scopes, th);
        if (log) log("seed " + std::to_string(seed) + ": training bootstrapped, threshold " + fmt(th, 2));
        SeedRun::Boot b{th, run_stage("train-bootstrapped", [&] {
                            return train_phase(cfg, pv.train, views(run.games.val, pv.global),
                                               derive_seed(seed, "bootstrapped"), bdir, log, tag);
                        })};
        b.val = success(b.trained.policy, run.games.val, pv.global, cfg.env);
        b.test = success(b.trained.policy, run.games.test, pv.global, cfg.env);
        run.boots.push_back(std::move(b));
    }
    if (!dir.empty()) {
        nlohmann::json j{{"seed", seed}, {"base_val", run.base_val}, {"base_test", run.base_test}};
        for (const auto& b : run.boots)
            j["bootstrapped"].push_back({{"threshold", b.threshold}, {"val", b.val}, {"test", b.test}});
        write_json(dir / "results.json", j);
    }
    return run;
}

struct PipelineOutput {
    std::vector<SeedRun> runs;
    std::vector<ResultRecord> records;
};

inline std::vector<ResultRecord> summarize(const ExperimentConfig& cfg, const std::vector<SeedRun>& runs) {
    std::vector<ResultRecord> records;
    ResultRecord base{cfg.arch.label(), config_digest(cfg)};
    for (const auto& r : runs) {
        base.seeds.push_back(r.seed);
        base.val_success.push_back(r.base_val);
        base.test_success.push_back(r.base_test);
    }
    records.push_back(base);
    if (runs.empty()) return records;
    for (std::size_t k = 0; k < runs.front().boots.size(); ++k) {
        ResultRecord b{crest_label(cfg), config_digest(cfg)};
        b.threshold = runs.front().boots[k].threshold;
        for (const auto& r : runs) {
            b.seeds.push_back(r.seed);
            b.val_success.push_back(r.boots[k].val);
            b.test_success.push_back(r.boots[k].test);
        }
        records.push_back(b);
    }
    return records;
}

inline void write_records(const fs::path& out, const std::string& stem, const std::vector<ResultRecord>& records) {
    if (out.empty()) return;
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : records) j.push_back(to_json(r));
    write_json(out / (stem + ".json"), j);
    write_text(out / (stem + ".csv"), records_csv(records));
}

/// The full two-phase pipeline at the configured threshold, repeated over every seed.
inline PipelineOutput run_pipeline(const ExperimentConfig& cfg, const fs::path& out, const Logger& log = {}) {
    cfg.validate();
    if (!out.empty()) write_json(out / "config.json", cfg);
    PipelineOutput p;
    for (auto seed : cfg.seeds) p.runs.push_back(run_seed(cfg, seed, {cfg.threshold}, out, log));
    p.records = summarize(cfg, p.runs);
    write_records(out, "results", p.records);
    return p;
}

/// Bootstrapped retraining at each threshold; the base phase is shared per seed.
inline PipelineOutput sweep_threshold(const ExperimentConfig& cfg, const std::vector<double>& thresholds,
                                      const fs::path& out, const Logger& log = {}) {
    cfg.validate();
    if (!out.empty()) write_json(out / "config.json", cfg);
    PipelineOutput p;
    for (auto seed : cfg.seeds) p.runs.push_back(run_seed(cfg, seed, thresholds, out, log));
    p.records = summarize(cfg, p.runs);
    if (!out.empty()) {
        std::string csv = "threshold,mean_val_success,mean_test_success\n";
        for (std::size_t i = 1; i < p.records.size(); ++i)
            csv += fmt(p.records[i].threshold, 2) + "," + fmt(p.records[i].mean_val()) + "," +
                   fmt(p.records[i].mean_test()) + "\n";
        write_text(out / "sweep.csv", csv);
    }
    write_records(out, "results", p.records);
    return p;
}

/// Evaluates trained policies without retraining on fresh games of each quest length.
/// Bootstrapped policies prune online with G.
inline std::vector<ResultRecord> zero_shot(const ExperimentConfig& cfg, const std::vector<SeedRun>& runs,
                                           const std::vector<int>& lengths, const fs::path& out = {}) {
    std::vector<ResultRecord> records;
    for (int L : lengths) {
        ResultRecord base{cfg.arch.label(), config_digest(cfg)};
        base.quest_length = L;
        std::vector<ResultRecord> boots;
        for (const auto& run : runs) {
            auto val = make_worlds(cfg, run.seed, Split::transfer, cfg.n_val, L);
            std::vector<World> test;
            for (int i = 0; i < cfg.n_test; ++i)
                test.push_back(std::make_shared<WorldGraph>(
                    generate_world(cfg.mode, L, world_seed(run.seed, Split::transfer, cfg.n_val + i, L))));
            base.seeds.push_back(run.seed);
            base.val_success.push_back(success(run.base.policy, val, {}, cfg.env));
            base.test_success.push_back(success(run.base.policy, test, {}, cfg.env));
            for (std::size_t k = 0; k < run.boots.size(); ++k) {
                if (boots.size() <= k) {
                    boots.push_back({crest_label(cfg), config_digest(cfg)});
                    boots.back().threshold = run.boots[k].threshold;
                    boots.back().quest_length = L;
                }
                TokenFilter g = pruning_filter(run.scopes.global, run.boots[k].threshold);
                boots[k].seeds.push_back(run.seed);
                boots[k].val_success.push_back(success(run.boots[k].trained.policy, val, g, cfg.env));
                boots[k].test_success.push_back(success(run.boots[k].trained.policy, test, g, cfg.env));
            }
        }
        records.push_back(base);
        records.insert(records.end(), boots.begin(), boots.end());
    }
    write_records(out, "zero_shot", records);
    return records;
}

/// Reloads a pipeline output directory (checkpoints, EATA, config) into SeedRuns, no retraining.
inline std::vector<SeedRun> load_runs(const fs::path& dir, ExperimentConfig* cfg_out = nullptr) {
    ExperimentConfig cfg = read_json(dir / "config.json").get<ExperimentConfig>();
    auto table = load_table(cfg);
    std::vector<SeedRun> runs;
    for (auto seed : cfg.seeds) {
        const fs::path sd = dir / ("seed_" + std::to_string(seed));
        SeedRun r;
        r.seed = seed;
        r.games = make_game_sets(cfg, seed);
        r.base.policy = Policy::from_json(read_json(sd / "base" / "checkpoint.json"));
        r.eata.per_game = eata_from_json(read_json(sd / "eata.json"));
        r.scopes = build_scopes(r.eata.per_game, table);
        for (const auto& entry : fs::directory_iterator(sd)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("bootstrapped_th", 0) != 0) continue;
            SeedRun::Boot b{std::stod(name.substr(15)), {}};
            b.trained.policy = Policy::from_json(read_json(entry.path() / "checkpoint.json"));
            r.boots.push_back(std::move(b));
        }
        std::sort(r.boots.begin(), r.boots.end(), [](const auto& a, const auto& b) { return a.threshold < b.threshold; });
        runs.push_back(std::move(r));
    }
    if (cfg_out) *cfg_out = cfg;
    return runs;
}

/// {attention on/off} x {MLP, LSTM scorer} x embedding files. Base policies do not depend on
/// the embedding file and are trained once per architecture.
inline std::vector<ResultRecord> ablate(const ExperimentConfig& cfg, const std::vector<std::pair<std::string, std::string>>& embeddings,
                                        const fs::path& out, const Logger& log = {}) {
    std::vector<ResultRecord> records;
    for (bool attention : {true, false}) {
        for (bool recurrent : {false, true}) {
            ExperimentConfig c = cfg;
            c.arch.use_attention = attention;
            c.arch.recurrent_scorer = recurrent;
            const std::string arch_dir = std::string(recurrent ? "drqn" : "dqn") + (attention ? "_attn" : "_noattn");
            std::vector<ResultRecord> boots;
            ResultRecord base{c.arch.label(), config_digest(c)};
            for (auto seed : c.seeds) {
                const fs::path dir = out.empty() ? fs::path{} : out / arch_dir / ("seed_" + std::to_string(seed));
                GameSets games = make_game_sets(c, seed);
                TrainedPolicy bp = train_phase(c, views(games.train), views(games.val), derive_seed(seed, "base"),
                                               dir.empty() ? dir : dir / "base", log, "base " + arch_dir);
                base.seeds.push_back(seed);
                base.val_success.push_back(success(bp.policy, games.val, {}, c.env));
                base.test_success.push_back(success(bp.policy, games.test, {}, c.env));
                EataCollection eata = collect_eata(bp.result.fitted, views(games.train), c.env);
                for (std::size_t e = 0; e < embeddings.size(); ++e) {
                    ExperimentConfig ce = c;
                    ce.embedding_name = embeddings[e].first;
                    ce.embeddings = embeddings[e].second;
                    auto table = run_stage("prune", [&] { return load_table(ce); });
                    RelevanceScopes scopes = build_scopes(eata.per_game, table);
                    PrunedViews pv = pruned_views(games.train, scopes, ce.threshold);
                    TrainedPolicy tp = train_phase(ce, pv.train, views(games.val, pv.global),
                                                   derive_seed(seed, "bootstrapped"),
                                                   dir.empty() ? dir : dir / ("bootstrapped_" + ce.embedding_name), log,
                                                   "boot " + ce.embedding_name);
                    if (boots.size() <= e) {
                        boots.push_back({crest_label(ce), config_digest(ce)});
                        boots.back().threshold = ce.threshold;
                    }
                    boots[e].seeds.push_back(seed);
                    boots[e].val_success.push_back(success(tp.policy, games.val, pv.global, ce.env));
                    boots[e].test_success.push_back(success(tp.policy, games.test, pv.global, ce.env));
                }
            }
            records.push_back(base);
            records.insert(records.end(), boots.begin(), boots.end());
        }
    }
    write_records(out, "ablation", records);
    return records;
}

}  // namespace crest
