#include <gtest/gtest.h>

#include "crest/agent.hpp"

using namespace crest;

namespace {

Architecture small_arch(bool attention, bool recurrent) {
    Architecture a;
    a.use_attention = attention;
    a.recurrent_scorer = recurrent;
    a.embedding_dim = 6;
    a.repr_hidden = 5;
    a.scorer_hidden = 4;
    a.head_hidden = 7;
    return a;
}

Policy small_policy(bool attention, bool recurrent, std::uint64_t seed = 1) {
    Policy p;
    p.vocab = Vocabulary::build({"you are in the kitchen there is an exit to the north", "take the coin"});
    p.grammar = CommandGrammar::standard();
    p.net = PolicyNetwork(small_arch(attention, recurrent), p.vocab.size());
    Rng rng(seed);
    p.net.initialize(rng);
    return p;
}

}  // namespace

TEST(PolicyNetwork, ParameterShapes) {
    PolicyNetwork drqn(small_arch(true, true), 30);
    const auto& p = drqn.params();
    EXPECT_EQ(p.get("embedding").shape, (std::vector<std::size_t>{30, 6}));
    EXPECT_EQ(p.get("repr.W").shape, (std::vector<std::size_t>{20, 11}));
    EXPECT_EQ(p.get("attn.W").shape, (std::vector<std::size_t>{5, 5}));
    EXPECT_EQ(p.get("scorer.W").shape, (std::vector<std::size_t>{16, 9}));
    EXPECT_EQ(p.get("verb.W2").shape, (std::vector<std::size_t>{10, 7}));
    EXPECT_EQ(p.get("noun.b2").shape, (std::vector<std::size_t>{10}));

    PolicyNetwork dqn(small_arch(false, false), 30);
    EXPECT_FALSE(dqn.params().has("attn.W"));
    EXPECT_EQ(dqn.params().get("scorer.W").shape, (std::vector<std::size_t>{4, 5}));
}

TEST(PolicyNetwork, InitializationBoundsAndForgetBias) {
    Policy p = small_policy(true, true);
    const auto& params = p.net.params();
    for (double x : params.get("repr.W").data) EXPECT_LE(std::abs(x), 1.0 / std::sqrt(11.0));
    for (double x : params.get("embedding").data) EXPECT_LE(std::abs(x), 1.0);
    const auto& rb = params.get("repr.b").data;
    for (std::size_t k = 5; k < 10; ++k) EXPECT_EQ(rb[k], 1.0);
    const auto& sb = params.get("scorer.b").data;
    for (std::size_t k = 4; k < 8; ++k) EXPECT_EQ(sb[k], 1.0);
}

TEST(Forward, ShapesAndAttentionWeights) {
    for (bool att : {false, true})
        for (bool rec : {false, true}) {
            Policy p = small_policy(att, rec);
            TokenIds ids = encode_state("take the coin", "you are in the kitchen", p.vocab);
            AgentOutput out = forward(p.net, ids, initial_agent_state(p.net));
            EXPECT_EQ(out.q.verb.size(), 10u);
            EXPECT_EQ(out.q.noun.size(), 10u);
            if (att) {
                ASSERT_EQ(out.attention.size(), ids.size());
                double s = 0;
                for (double a : out.attention) s += a;
                EXPECT_NEAR(s, 1.0, 1e-12);
            } else {
                EXPECT_TRUE(out.attention.empty());
            }
        }
}

TEST(Forward, RecurrentScorerCarriesState) {
    Policy p = small_policy(true, true);
    TokenIds ids = encode_state("take the coin", "you are in the kitchen", p.vocab);
    AgentOutput first = forward(p.net, ids, initial_agent_state(p.net));
    AgentOutput second = forward(p.net, ids, first.state);
    EXPECT_NE(first.q.verb, second.q.verb);

    Policy dqn = small_policy(true, false);
    AgentOutput a = forward(dqn.net, ids, initial_agent_state(dqn.net));
    AgentOutput b = forward(dqn.net, ids, a.state);
    EXPECT_EQ(a.q.verb, b.q.verb);
}

TEST(QJoint, MeanOfHeads) {
    EXPECT_EQ(q_joint(1.0, 3.0), 2.0);
    EXPECT_EQ(q_joint(-1.0, 0.0), -0.5);
}

TEST(QJoint, SeparableMaxEqualsBruteForce) {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        QValues q{Vec(10), Vec(10)};
        for (auto& x : q.verb) x = rng.uniform(-3, 3);
        for (auto& x : q.noun) x = rng.uniform(-3, 3);
        double best = -1e300;
        ActionCommand arg;
        for (std::size_t v = 0; v < 10; ++v)
            for (std::size_t n = 0; n < 10; ++n)
                if (q_joint(q.verb[v], q.noun[n]) > best) {
                    best = q_joint(q.verb[v], q.noun[n]);
                    arg = {v, n};
                }
        Rng unused(0);
        EXPECT_EQ(select_action(q, 0.0, unused), arg);
    }
}

TEST(SelectAction, GreedyExample) {
    QValues q{Vec(10, 0.0), Vec(10, 0.0)};
    q.verb[0] = 1.0;
    q.noun[1] = 2.0;
    Rng rng(1);
    const auto before = rng;
    EXPECT_EQ(select_action(q, 0.0, rng), (ActionCommand{0, 1}));
    Rng copy = before;
    EXPECT_EQ(rng.uniform(), copy.uniform());  // no draws at epsilon 0
}

TEST(SelectAction, TiesGoToLowestIndex) {
    QValues q{Vec(10, 0.5), Vec(10, 0.5)};
    Rng rng(1);
    EXPECT_EQ(select_action(q, 0.0, rng), (ActionCommand{0, 0}));
}

TEST(SelectAction, FullExplorationIsUniform) {
    QValues q{Vec(10, 0.0), Vec(10, 0.0)};
    q.verb[3] = 100;
    Rng rng(42);
    const int draws = 20000;
    std::vector<int> verbs(10, 0), nouns(10, 0);
    for (int i = 0; i < draws; ++i) {
        auto a = select_action(q, 1.0, rng);
        ++verbs[a.verb];
        ++nouns[a.noun];
    }
    for (const auto* counts : {&verbs, &nouns}) {
        double chi = 0, expected = draws / 10.0;
        for (int c : *counts) chi += (c - expected) * (c - expected) / expected;
        EXPECT_LT(chi, 27.88);  // 9 dof, p = 0.001
    }
}

TEST(CommandText, JoinsVerbAndNoun) {
    const auto g = CommandGrammar::standard();
    ActionCommand a{static_cast<std::size_t>(g.verb_index("take")), static_cast<std::size_t>(g.noun_index("coin"))};
    EXPECT_EQ(command_text(a, g), "take coin");
    EXPECT_THROW(command_text({10, 0}, g), std::out_of_range);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    for (bool att : {false, true})
        for (bool rec : {false, true}) {
            Policy p = small_policy(att, rec, 7);
            Policy back = Policy::from_json(nlohmann::json::parse(p.to_json().dump()));
            ASSERT_TRUE(back.net.params().congruent(p.net.params()));
            for (std::size_t i = 0; i < p.net.params().size(); ++i)
                EXPECT_EQ(back.net.params()[i].data, p.net.params()[i].data);
            EXPECT_EQ(back.vocab.to_json(), p.vocab.to_json());
            EXPECT_EQ(back.net.arch().use_attention, att);
            TokenIds ids = encode_state("take the coin", "exit to the north", p.vocab);
            EXPECT_EQ(forward(back.net, ids, initial_agent_state(back.net)).q.noun,
                      forward(p.net, ids, initial_agent_state(p.net)).q.noun);
        }
}

TEST(Checkpoint, ArchitectureMismatchIsRejected) {
    Policy p = small_policy(true, true);
    nlohmann::json j = p.to_json();
    j["architecture"]["use_attention"] = false;
    EXPECT_THROW(Policy::from_json(j), ParseError);
}
