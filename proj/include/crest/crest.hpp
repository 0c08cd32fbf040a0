#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "embed.hpp"
#include "lexicon.hpp"
#include "qlearn.hpp"

namespace crest {

using TokenSet = std::set<std::string>;

/// Tokens of every command the base policy issued in one game (EATA).
struct EpisodicActionTokens {
    std::size_t game_id = 0;
    TokenSet tokens;
    bool solved = false;
};

/// Union of command tokens of a trajectory.
inline TokenSet action_tokens(const std::vector<std::string>& commands) {
    TokenSet s;
    for (const auto& c : commands)
        for (auto& t : tokenize(c)) s.insert(std::move(t));
    return s;
}

struct EataCollection {
    std::vector<EpisodicActionTokens> per_game;
    std::vector<std::size_t> rejects;  // training games the base policy failed to solve
    std::vector<Trajectory> trajectories;
};

/// Greedy inference of the base policy on every training game.
inline EataCollection collect_eata(const Policy& base, const std::vector<GameView>& games, const EnvOptions& env_opts) {
    EvalResult r = evaluate_policy(base, games, env_opts, true);
    EataCollection out;
    for (std::size_t g = 0; g < games.size(); ++g) {
        const Trajectory& t = r.trajectories[g];
        out.per_game.push_back({g, action_tokens(t.commands), t.solved});
        if (!t.solved) out.rejects.push_back(g);
    }
    out.trajectories = std::move(r.trajectories);
    return out;
}

/// G = union over games of A^k.
inline TokenSet build_global_scope(const std::vector<EpisodicActionTokens>& eatas) {
    if (eatas.empty()) throw ContractError("global scope needs at least one game");
    TokenSet g;
    for (const auto& e : eatas) g.insert(e.tokens.begin(), e.tokens.end());
    return g;
}

/// max over a in scope of cos(w, a), clamped to [0, 1]. Unembedded tokens score 0.
inline double token_relevance(const std::string& w, const TokenSet& scope, const EmbeddingTable& table) {
    if (scope.empty()) throw ContractError("token relevance needs a non-empty scope");
    const auto* vw = table.find(w);
    if (!vw) return 0.0;
    double best = 0.0;
    for (const auto& a : scope)
        if (const auto* va = table.find(a)) best = std::max(best, cosine(*vw, *va));
    return std::clamp(best, 0.0, 1.0);
}

enum class ScopeKind { per_game, global };

inline const char* to_string(ScopeKind s) { return s == ScopeKind::per_game ? "per-game" : "global"; }

inline ScopeKind parse_scope(const std::string& s) {
    if (s == "per-game" || s == "per_game") return ScopeKind::per_game;
    if (s == "global") return ScopeKind::global;
    throw ContractError("unknown scope '" + s + "' (expected per-game or global)");
}

/// Token relevance scores for one scope; memoized per token (scores depend only on token and scope).
class TokenRelevanceMap {
public:
    TokenRelevanceMap(std::shared_ptr<const EmbeddingTable> table, TokenSet scope, ScopeKind kind,
                      std::size_t game_id = 0)
        : table_(std::move(table)), scope_(std::move(scope)), kind_(kind), game_id_(game_id) {
        if (scope_.empty()) throw ContractError("token relevance needs a non-empty scope");
    }

    double score(const std::string& token) const {
        auto it = scores_.find(token);
        if (it != scores_.end()) return it->second;
        double s = token_relevance(token, scope_, *table_);
        scores_.emplace(token, s);
        return s;
    }

    const TokenSet& scope() const { return scope_; }
    ScopeKind kind() const { return kind_; }
    std::size_t game_id() const { return game_id_; }
    const std::map<std::string, double>& scores() const { return scores_; }

private:
    std::shared_ptr<const EmbeddingTable> table_;
    TokenSet scope_;
    ScopeKind kind_;
    std::size_t game_id_;
    mutable std::map<std::string, double> scores_;
};

/// Keeps tokens scoring at least `threshold`, in order.
inline TokenList prune_tokens(const TokenList& tokens, const TokenRelevanceMap& relevance, double threshold) {
    TokenList out;
    for (const auto& t : tokens)
        if (relevance.score(t) >= threshold) out.push_back(t);
    return out;
}

inline TokenList prune_observation(const std::string& observation, const TokenRelevanceMap& relevance,
                                   double threshold) {
    return prune_tokens(tokenize(observation), relevance, threshold);
}

/// TokenFilter that prunes with `relevance` at `threshold`.
inline TokenFilter pruning_filter(std::shared_ptr<const TokenRelevanceMap> relevance, double threshold) {
    return [relevance = std::move(relevance), threshold](const TokenList& tokens) {
        return prune_tokens(tokens, *relevance, threshold);
    };
}

struct PrunedRecord {
    std::size_t game_id = 0;
    std::size_t step = 0;
    std::string goal;
    std::string original;
    TokenList retained;
    double threshold = 0.0;
    ScopeKind scope = ScopeKind::per_game;
};

using PrunedCorpus = std::vector<PrunedRecord>;

inline nlohmann::json to_json(const PrunedRecord& r) {
    return {{"game_id", r.game_id},   {"step", r.step},           {"goal", r.goal},
            {"original", r.original}, {"retained", r.retained},   {"threshold", r.threshold},
            {"scope", to_string(r.scope)}};
}

inline PrunedRecord pruned_record_from_json(const nlohmann::json& j) {
    PrunedRecord r;
    r.game_id = j.at("game_id").get<std::size_t>();
    r.step = j.at("step").get<std::size_t>();
    r.goal = j.at("goal").get<std::string>();
    r.original = j.at("original").get<std::string>();
    r.retained = j.at("retained").get<TokenList>();
    r.threshold = j.at("threshold").get<double>();
    r.scope = parse_scope(j.at("scope").get<std::string>());
    return r;
}

/// Line-delimited JSON, one record per line.
inline std::string corpus_to_jsonl(const PrunedCorpus& corpus) {
    std::string out;
    for (const auto& r : corpus) out += to_json(r).dump() + "\n";
    return out;
}

/// Relevance maps for a set of training games: per-game scopes A^k and the global scope G.
struct RelevanceScopes {
    std::vector<std::shared_ptr<const TokenRelevanceMap>> per_game;
    std::shared_ptr<const TokenRelevanceMap> global;
};

inline RelevanceScopes build_scopes(const std::vector<EpisodicActionTokens>& eatas,
                                    std::shared_ptr<const EmbeddingTable> table) {
    RelevanceScopes s;
    s.global = std::make_shared<TokenRelevanceMap>(table, build_global_scope(eatas), ScopeKind::global);
    for (const auto& e : eatas) {
        // an episode with no issued command falls back to G
        const TokenSet& scope = e.tokens.empty() ? s.global->scope() : e.tokens;
        s.per_game.push_back(std::make_shared<TokenRelevanceMap>(table, scope, ScopeKind::per_game, e.game_id));
    }
    return s;
}

/// Prunes every observation of every step of the base-policy trajectories. Per-game scope uses
/// each game's own A^k, global scope uses G for all games.
inline PrunedCorpus prune_corpus(const std::vector<GameView>& games, const std::vector<Trajectory>& trajectories,
                                 const RelevanceScopes& scopes, double threshold, ScopeKind scope) {
    if (threshold < 0.0 || threshold > 1.0) throw ContractError("threshold must lie in [0, 1]");
    PrunedCorpus corpus;
    for (const auto& t : trajectories) {
        const auto g = t.game_id;
        if (g >= games.size()) throw ContractError("trajectory refers to an unknown game");
        const TokenRelevanceMap& rel = scope == ScopeKind::global ? *scopes.global : *scopes.per_game.at(g);
        const std::string goal = render_goal(*games[g].world);
        for (std::size_t step = 0; step < t.observations.size(); ++step) {
            corpus.push_back({g, step, goal, t.observations[step],
                              prune_observation(t.observations[step], rel, threshold), threshold, scope});
        }
    }
    return corpus;
}

inline nlohmann::json eata_to_json(const EataCollection& c) {
    nlohmann::json games = nlohmann::json::array();
    for (const auto& e : c.per_game) games.push_back({{"game_id", e.game_id}, {"tokens", e.tokens}, {"solved", e.solved}});
    nlohmann::json j{{"games", games}, {"rejects", c.rejects}};
    j["global"] = c.per_game.empty() ? TokenSet{} : build_global_scope(c.per_game);
    return j;
}

inline std::vector<EpisodicActionTokens> eata_from_json(const nlohmann::json& j) {
    std::vector<EpisodicActionTokens> out;
    for (const auto& g : j.at("games"))
        out.push_back({g.at("game_id").get<std::size_t>(), g.at("tokens").get<TokenSet>(), g.at("solved").get<bool>()});
    return out;
}

}  // namespace crest
