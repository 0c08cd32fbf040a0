// Command-line front end: game generation, training, pruning, evaluation and experiment drivers.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crest/harness.hpp"

using namespace crest;

namespace {

struct CommonOptions {
    std::string config;
    std::string embeddings;
    bool no_attention = false;
    std::string scorer;
    std::vector<std::uint64_t> seeds;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--embeddings", o.embeddings, "word-vector file (overrides the config)");
    cmd->add_flag("--no-attention", o.no_attention, "use the final hidden state instead of attention");
    cmd->add_option("--scorer", o.scorer, "action scorer")->check(CLI::IsMember({"mlp", "lstm"}));
    cmd->add_option("--seeds", o.seeds, "master seeds (overrides the config)");
    cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
}

ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (!o.embeddings.empty()) {
        cfg.embeddings = o.embeddings;
        cfg.embedding_name = fs::path(o.embeddings).stem().string();
    }
    if (o.no_attention) cfg.arch.use_attention = false;
    if (o.scorer == "mlp") cfg.arch.recurrent_scorer = false;
    if (o.scorer == "lstm") cfg.arch.recurrent_scorer = true;
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    cfg.validate();
    return cfg;
}

Logger logger(const CommonOptions& o) { return o.quiet ? Logger{} : stderr_logger(); }

std::vector<World> split_worlds(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& split) {
    GameSets g = make_game_sets(cfg, seed);
    if (split == "train") return g.train;
    if (split == "val") return g.val;
    if (split == "test") return g.test;
    throw ContractError("unknown split '" + split + "'");
}

void print_records(const std::vector<ResultRecord>& records) {
    std::cout << records_csv(records);
}

int play(const std::optional<std::string>& world_file, Mode mode, int L, std::uint64_t seed) {
    WorldGraph w = world_file ? world_from_json(read_json(*world_file)) : generate_world(mode, L, seed);
    TextEnv env(w, TemplatePools::builtin());
    auto start = env.reset();
    std::cout << "Goal: " << start.goal << "\n\n" << start.observation << "\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line == "quit" || line == "exit") break;
        if (line == "help") {
            std::cout << "commands: <verb> <noun>, e.g. \"go north\" or \"take coin\"; 'solution' shows the shortest path; 'quit' leaves\n";
            continue;
        }
        if (line == "solution") {
            for (const auto& c : optimal_trajectory(w)) std::cout << "  " << c << "\n";
            continue;
        }
        StepResult r = env.step(join_tokens(tokenize(line)));
        std::cout << r.observation << "\n";
        if (r.done) {
            std::cout << (r.reward > 0 ? "Solved" : "Out of steps") << " after " << env.state().steps_taken
                      << " step(s).\n";
            break;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CREST: observation pruning for text-game agents"};
    app.require_subcommand(1);

    // gen-games
    auto* gen = app.add_subcommand("gen-games", "generate coin-collector worlds as JSON");
    std::string gen_mode = "easy", gen_out;
    int gen_L = 5, gen_count = 10;
    std::uint64_t gen_seed = 1;
    gen->add_option("--mode", gen_mode)->check(CLI::IsMember({"easy", "medium", "hard"}));
    gen->add_option("--quest-length", gen_L)->check(CLI::PositiveNumber);
    gen->add_option("--count", gen_count)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out-dir", gen_out)->required();

    // train
    CommonOptions train_o;
    std::string train_out;
    auto* trn = app.add_subcommand("train", "train a base policy on the configured training games");
    add_common(trn, train_o);
    trn->add_option("--out", train_out)->required();

    // collect-eata
    CommonOptions eata_o;
    std::string eata_ckpt, eata_out;
    auto* eat = app.add_subcommand("collect-eata", "episodic action tokens of a base policy on its training games");
    add_common(eat, eata_o);
    eat->add_option("--base-checkpoint", eata_ckpt)->required()->check(CLI::ExistingFile);
    eat->add_option("--out", eata_out)->required();

    // prune
    CommonOptions prune_o;
    std::string prune_ckpt, prune_out, prune_scope = "per-game";
    double prune_th = -1;
    auto* prn = app.add_subcommand("prune", "prune the training corpus with token relevance scores");
    add_common(prn, prune_o);
    prn->add_option("--base-checkpoint", prune_ckpt)->required()->check(CLI::ExistingFile);
    prn->add_option("--threshold", prune_th)->check(CLI::Range(0.0, 1.0));
    prn->add_option("--scope", prune_scope)->check(CLI::IsMember({"per-game", "global"}));
    prn->add_option("--out", prune_out)->required();

    // eval
    CommonOptions eval_o;
    std::string eval_ckpt, eval_split = "val", eval_eata;
    double eval_th = -1;
    auto* evl = app.add_subcommand("eval", "greedy success rate of a checkpoint");
    add_common(evl, eval_o);
    evl->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
    evl->add_option("--split", eval_split)->check(CLI::IsMember({"train", "val", "test"}));
    evl->add_option("--eata", eval_eata, "eata.json; enables online pruning with the global scope")
        ->check(CLI::ExistingFile);
    evl->add_option("--threshold", eval_th)->check(CLI::Range(0.0, 1.0));

    // pipeline
    CommonOptions pipe_o;
    std::string pipe_out;
    auto* pip = app.add_subcommand("pipeline", "base -> EATA -> prune -> bootstrapped -> evaluate, per seed");
    add_common(pip, pipe_o);
    pip->add_option("--out", pipe_out)->required();

    // sweep
    CommonOptions sweep_o;
    std::string sweep_out;
    std::vector<double> sweep_th;
    auto* swp = app.add_subcommand("sweep", "bootstrapped retraining over a threshold grid (shared base)");
    add_common(swp, sweep_o);
    swp->add_option("--thresholds", sweep_th)->check(CLI::Range(0.0, 1.0));
    swp->add_option("--out", sweep_out)->required();

    // zero-shot
    std::string zs_run, zs_out;
    std::vector<int> zs_lengths;
    auto* zsh = app.add_subcommand("zero-shot", "evaluate pipeline checkpoints on longer quests");
    zsh->add_option("--run", zs_run, "output directory of a pipeline or sweep run")->required()->check(CLI::ExistingDirectory);
    zsh->add_option("--lengths", zs_lengths)->check(CLI::PositiveNumber);
    zsh->add_option("--out", zs_out);

    // ablate
    CommonOptions abl_o;
    std::string abl_out;
    std::vector<std::string> abl_files;
    auto* abl = app.add_subcommand("ablate", "attention x scorer x embedding grid");
    add_common(abl, abl_o);
    abl->add_option("--embedding-files", abl_files, "name=path pairs (default: the configured file)");
    abl->add_option("--out", abl_out)->required();

    // play
    std::string play_mode = "easy";
    std::optional<std::string> play_world;
    int play_L = 3;
    std::uint64_t play_seed = 1;
    auto* ply = app.add_subcommand("play", "play one game from the keyboard");
    ply->add_option("--mode", play_mode)->check(CLI::IsMember({"easy", "medium", "hard"}));
    ply->add_option("--quest-length", play_L)->check(CLI::PositiveNumber);
    ply->add_option("--seed", play_seed);
    ply->add_option("--world", play_world, "world JSON written by gen-games")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            for (int i = 0; i < gen_count; ++i) {
                WorldGraph w = generate_world(parse_mode(gen_mode), gen_L, world_seed(gen_seed, Split::train, i));
                write_json(fs::path(gen_out) / ("game_" + std::to_string(i) + ".json"), world_to_json(w));
            }
            std::cout << "wrote " << gen_count << " world(s) to " << gen_out << "\n";
        } else if (*trn) {
            ExperimentConfig cfg = resolve(train_o);
            const auto seed = cfg.seeds.front();
            GameSets g = make_game_sets(cfg, seed);
            write_json(fs::path(train_out) / "config.json", cfg);
            TrainedPolicy tp = train_phase(cfg, views(g.train), views(g.val), derive_seed(seed, "base"), train_out,
                                           logger(train_o), "base");
            std::cout << "best epoch " << tp.result.best_epoch << ", val success " << fmt(tp.result.best_val_success)
                      << "; best fit epoch " << tp.result.fitted_epoch << ", train success "
                      << fmt(tp.result.fitted_train_success) << "\n";
        } else if (*eat) {
            ExperimentConfig cfg = resolve(eata_o);
            Policy base = Policy::from_json(read_json(eata_ckpt));
            EataCollection c = collect_eata(base, views(split_worlds(cfg, cfg.seeds.front(), "train")), cfg.env);
            write_json(fs::path(eata_out) / "eata.json", eata_to_json(c));
            std::cout << c.per_game.size() << " game(s), " << c.rejects.size() << " unsolved\n";
        } else if (*prn) {
            ExperimentConfig cfg = resolve(prune_o);
            const double th = prune_th >= 0 ? prune_th : cfg.threshold;
            Policy base = Policy::from_json(read_json(prune_ckpt));
            auto train = views(split_worlds(cfg, cfg.seeds.front(), "train"));
            EataCollection c = collect_eata(base, train, cfg.env);
            auto table = run_stage("prune", [&] { return load_table(cfg); });
            RelevanceScopes scopes = build_scopes(c.per_game, table);
            PrunedCorpus corpus = prune_corpus(train, c.trajectories, scopes, th, parse_scope(prune_scope));
            write_json(fs::path(prune_out) / "eata.json", eata_to_json(c));
            write_text(fs::path(prune_out) / "pruned_corpus.jsonl", corpus_to_jsonl(corpus));
            std::cout << corpus.size() << " record(s) written\n";
        } else if (*evl) {
            ExperimentConfig cfg = resolve(eval_o);
            Policy p = Policy::from_json(read_json(eval_ckpt));
            TokenFilter filter;
            if (!eval_eata.empty()) {
                RelevanceScopes scopes = build_scopes(eata_from_json(read_json(eval_eata)), load_table(cfg));
                filter = pruning_filter(scopes.global, eval_th >= 0 ? eval_th : cfg.threshold);
            }
            for (auto seed : cfg.seeds) {
                EvalResult r = evaluate_policy(p, views(split_worlds(cfg, seed, eval_split), filter), cfg.env);
                std::cout << "seed " << seed << " " << eval_split << " success " << fmt(r.success_rate) << " ("
                          << r.solved << "/" << r.games << "), mean steps when solved " << fmt(r.mean_steps_solved, 2)
                          << "\n";
            }
        } else if (*pip) {
            print_records(run_pipeline(resolve(pipe_o), pipe_out, logger(pipe_o)).records);
        } else if (*swp) {
            ExperimentConfig cfg = resolve(sweep_o);
            if (sweep_th.empty()) sweep_th = cfg.sweep_thresholds;
            print_records(sweep_threshold(cfg, sweep_th, sweep_out, logger(sweep_o)).records);
        } else if (*zsh) {
            ExperimentConfig cfg;
            auto runs = load_runs(zs_run, &cfg);
            if (zs_lengths.empty()) zs_lengths = cfg.zero_shot_lengths;
            if (zs_lengths.empty()) throw ContractError("no quest lengths given (--lengths or zero_shot_lengths)");
            print_records(zero_shot(cfg, runs, zs_lengths, zs_out.empty() ? fs::path(zs_run) : fs::path(zs_out)));
        } else if (*abl) {
            ExperimentConfig cfg = resolve(abl_o);
            std::vector<std::pair<std::string, std::string>> files;
            for (const auto& f : abl_files) {
                const auto eq = f.find('=');
                if (eq == std::string::npos) files.emplace_back(fs::path(f).stem().string(), f);
                else files.emplace_back(f.substr(0, eq), f.substr(eq + 1));
            }
            if (files.empty()) files.emplace_back(cfg.embedding_name, cfg.embeddings);
            print_records(ablate(cfg, files, abl_out, logger(abl_o)));
        } else if (*ply) {
            return play(play_world, parse_mode(play_mode), play_L, play_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
