#include <gtest/gtest.h>

#include <filesystem>

#include "crest/crest.hpp"

using namespace crest;

namespace {

std::shared_ptr<const EmbeddingTable> bundled() {
    static auto table = std::make_shared<const EmbeddingTable>(
        load_embeddings(std::filesystem::path(CREST_SOURCE_DIR) / "data/embeddings/bundled-50d.txt"));
    return table;
}

std::shared_ptr<const EmbeddingTable> toy_table() {
    auto t = std::make_shared<EmbeddingTable>();
    t->name = "toy";
    t->dim = 2;
    t->vectors = {{"go", {1, 0}}, {"north", {0.6, 0.8}}, {"away", {-1, 0}}, {"lamp", {0, 1}}};
    return t;
}

bool is_subsequence(const TokenList& sub, const TokenList& full) {
    std::size_t i = 0;
    for (const auto& t : full)
        if (i < sub.size() && sub[i] == t) ++i;
    return i == sub.size();
}

}  // namespace

TEST(ActionTokens, UnionOfCommandWords) {
    EXPECT_EQ(action_tokens({"go north", "go east", "take coin"}), (TokenSet{"go", "north", "east", "take", "coin"}));
    EXPECT_TRUE(action_tokens({}).empty());
}

TEST(TokenRelevance, IdentityScoresOne) {
    auto t = bundled();
    for (const auto& tok : CommandGrammar::standard().all_tokens())
        EXPECT_EQ(token_relevance(tok, {tok, "table"}, *t), 1.0) << tok;
}

TEST(TokenRelevance, ClampedAndOov) {
    auto t = toy_table();
    EXPECT_EQ(token_relevance("away", {"go"}, *t), 0.0);  // cosine -1 clamps to 0
    EXPECT_NEAR(token_relevance("north", {"go"}, *t), 0.6, 1e-15);
    EXPECT_EQ(token_relevance("zebra", {"go"}, *t), 0.0);
    EXPECT_EQ(token_relevance("lamp", {"zebra"}, *t), 0.0);
    EXPECT_THROW(token_relevance("go", {}, *t), ContractError);
}

TEST(TokenRelevance, MonotoneInScope) {
    auto t = bundled();
    TokenSet small{"go", "north"}, large{"go", "north", "coin", "take"};
    for (const auto& [tok, vec] : t->vectors) EXPECT_LE(token_relevance(tok, small, *t), token_relevance(tok, large, *t));
}

TEST(Prune, ThresholdZeroKeepsEverything) {
    auto t = bundled();
    TokenRelevanceMap rel(t, {"go", "east"}, ScopeKind::per_game);
    const std::string obs = "You've entered a pantry. There is an unblocked exit to the east. Zzyzx!";
    EXPECT_EQ(prune_observation(obs, rel, 0.0), tokenize(obs));
}

TEST(Prune, ThresholdOneKeepsOnlyScopeTokens) {
    auto t = bundled();
    TokenRelevanceMap rel(t, {"go", "east"}, ScopeKind::per_game);
    EXPECT_EQ(prune_observation("you could go east or west", rel, 1.0), (TokenList{"go", "east"}));
}

TEST(Prune, RetainedSetsNestAndSubsequence) {
    auto t = bundled();
    const auto& pools = TemplatePools::builtin();
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        WorldGraph w = generate_world(static_cast<Mode>(k % 3), 2 + k % 6, static_cast<std::uint64_t>(k));
        Rng stream(rng.next());
        const std::string obs = render_observation(w, static_cast<int>(rng.index(w.rooms.size())), stream, pools);
        TokenRelevanceMap rel(t, action_tokens(optimal_trajectory(w)), ScopeKind::per_game);
        const TokenList full = tokenize(obs);
        TokenList prev = full;
        for (int i = 0; i <= 10; ++i) {
            TokenList kept = prune_observation(obs, rel, i / 10.0);
            ASSERT_TRUE(is_subsequence(kept, prev)) << obs << " @ " << i / 10.0;
            ASSERT_TRUE(is_subsequence(kept, full));
            EXPECT_EQ(prune_tokens(kept, rel, i / 10.0), kept);  // idempotent
            prev = kept;
        }
    }
}

TEST(Prune, KeepsDirectionSentenceCore) {
    // an exit sentence loses its flavor words but keeps the action vocabulary
    auto t = bundled();
    TokenRelevanceMap rel(t, {"go", "east", "take", "coin"}, ScopeKind::per_game);
    const std::string obs = "You've just walked into a dusty attic. There is an exit to the east. Don't worry, it is unguarded.";
    TokenList kept = prune_observation(obs, rel, 0.5);
    EXPECT_NE(std::find(kept.begin(), kept.end(), "east"), kept.end());
    EXPECT_NE(std::find(kept.begin(), kept.end(), "exit"), kept.end());
    EXPECT_EQ(std::find(kept.begin(), kept.end(), "dusty"), kept.end());
    EXPECT_EQ(std::find(kept.begin(), kept.end(), "attic"), kept.end());
    EXPECT_LT(kept.size(), tokenize(obs).size() / 3);
}

TEST(Scopes, GlobalIsUnionAndEmptyEataFallsBack) {
    std::vector<EpisodicActionTokens> e{{0, {"go", "north"}, true}, {1, {}, false}, {2, {"take", "coin"}, true}};
    auto s = build_scopes(e, toy_table());
    EXPECT_EQ(s.global->scope(), (TokenSet{"go", "north", "take", "coin"}));
    EXPECT_EQ(s.per_game[1]->scope(), s.global->scope());
    EXPECT_EQ(s.per_game[2]->scope(), (TokenSet{"take", "coin"}));
    EXPECT_THROW(build_global_scope({}), ContractError);
}

TEST(Scopes, ParseNames) {
    EXPECT_EQ(parse_scope("per-game"), ScopeKind::per_game);
    EXPECT_EQ(parse_scope("global"), ScopeKind::global);
    EXPECT_THROW(parse_scope("local"), ContractError);
}

TEST(CollectEata, OraclePolicyStandIn) {
    // a random policy gives some EATA; every token must come from the grammar
    auto w = std::make_shared<const WorldGraph>(generate_world(Mode::easy, 2, 3));
    TextEnv env(*w);
    std::vector<std::string> corpus{env.goal(), env.victory_text()};
    for (const auto& r : env.room_texts()) corpus.push_back(r);
    Policy p;
    p.vocab = Vocabulary::build(corpus);
    p.grammar = CommandGrammar::standard();
    Architecture a;
    a.embedding_dim = 4;
    a.repr_hidden = a.scorer_hidden = a.head_hidden = 4;
    p.net = PolicyNetwork(a, p.vocab.size());
    Rng rng(1);
    p.net.initialize(rng);
    EataCollection c = collect_eata(p, {{w, nullptr}, {w, nullptr}}, {});
    ASSERT_EQ(c.per_game.size(), 2u);
    EXPECT_EQ(c.per_game[0].tokens, c.per_game[1].tokens);
    const auto all = p.grammar.all_tokens();
    for (const auto& tok : c.per_game[0].tokens) EXPECT_NE(std::find(all.begin(), all.end(), tok), all.end());
    EXPECT_EQ(c.rejects.size(), c.per_game[0].solved ? 0u : 2u);

    auto back = eata_from_json(nlohmann::json::parse(eata_to_json(c).dump()));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].tokens, c.per_game[1].tokens);
    EXPECT_EQ(back[1].game_id, 1u);
}

TEST(PruneCorpus, RecordsEveryStepAndRoundTrips) {
    auto w = std::make_shared<const WorldGraph>(generate_world(Mode::medium, 2, 9));
    TextEnv env(*w);
    Trajectory t;
    t.game_id = 0;
    t.observations.push_back(env.reset().observation);
    for (const auto& c : optimal_trajectory(*w)) t.observations.push_back(env.step(c).observation);
    std::vector<EpisodicActionTokens> e{{0, action_tokens(optimal_trajectory(*w)), true}};
    auto scopes = build_scopes(e, bundled());
    PrunedCorpus corpus = prune_corpus({{w, nullptr}}, {t}, scopes, 0.5, ScopeKind::per_game);
    ASSERT_EQ(corpus.size(), t.observations.size());
    for (const auto& r : corpus) EXPECT_TRUE(is_subsequence(r.retained, tokenize(r.original)));
    std::string jsonl = corpus_to_jsonl(corpus);
    auto first = pruned_record_from_json(nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n'))));
    EXPECT_EQ(first.retained, corpus[0].retained);
    EXPECT_EQ(first.goal, render_goal(*w));
    EXPECT_THROW(prune_corpus({{w, nullptr}}, {t}, scopes, 1.5, ScopeKind::global), ContractError);
}
