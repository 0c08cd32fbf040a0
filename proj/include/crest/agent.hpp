#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layers.hpp"
#include "lexicon.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace crest {

/// Shape of the policy network.
struct Architecture {
    bool use_attention = true;
    bool recurrent_scorer = true;  // LSTM action scorer (DRQN) instead of a shared MLP (DQN)
    std::size_t embedding_dim = 20;
    std::size_t repr_hidden = 100;
    std::size_t scorer_hidden = 64;
    std::size_t head_hidden = 64;
    std::size_t n_verbs = 10;
    std::size_t n_nouns = 10;

    std::string label() const {
        return std::string(recurrent_scorer ? "LSTM-DRQN" : "LSTM-DQN") + (use_attention ? "(+attn)" : "(no att)");
    }
};

inline void to_json(nlohmann::json& j, const Architecture& a) {
    j = {{"use_attention", a.use_attention}, {"recurrent_scorer", a.recurrent_scorer},
         {"embedding_dim", a.embedding_dim}, {"repr_hidden", a.repr_hidden},
         {"scorer_hidden", a.scorer_hidden}, {"head_hidden", a.head_hidden},
         {"n_verbs", a.n_verbs},             {"n_nouns", a.n_nouns}};
}

inline void from_json(const nlohmann::json& j, Architecture& a) {
    a.use_attention = j.value("use_attention", a.use_attention);
    a.recurrent_scorer = j.value("recurrent_scorer", a.recurrent_scorer);
    a.embedding_dim = j.value("embedding_dim", a.embedding_dim);
    a.repr_hidden = j.value("repr_hidden", a.repr_hidden);
    a.scorer_hidden = j.value("scorer_hidden", a.scorer_hidden);
    a.head_hidden = j.value("head_hidden", a.head_hidden);
    a.n_verbs = j.value("n_verbs", a.n_verbs);
    a.n_nouns = j.value("n_nouns", a.n_nouns);
}

/// Embedding -> LSTM representation generator -> (attention | last hidden state) -> action
/// scorer (MLP or LSTM) -> verb and noun Q-heads.
class PolicyNetwork {
public:
    PolicyNetwork() = default;

    PolicyNetwork(const Architecture& arch, std::size_t vocab_size) : arch_(arch), vocab_size_(vocab_size) {
        const std::size_t E = arch.embedding_dim, H = arch.repr_hidden, S = arch.scorer_hidden, K = arch.head_hidden;
        params_.add("embedding", {vocab_size, E});
        params_.add("repr.W", {4 * H, E + H});
        params_.add("repr.b", {4 * H});
        if (arch.use_attention) {
            params_.add("attn.W", {H, H});
            params_.add("attn.b", {H});
            params_.add("attn.v", {H});
        }
        if (arch.recurrent_scorer) {
            params_.add("scorer.W", {4 * S, H + S});
            params_.add("scorer.b", {4 * S});
        } else {
            params_.add("scorer.W", {S, H});
            params_.add("scorer.b", {S});
        }
        for (const char* head : {"verb", "noun"}) {
            const std::size_t out = std::string(head) == "verb" ? arch.n_verbs : arch.n_nouns;
            params_.add(std::string(head) + ".W1", {K, S});
            params_.add(std::string(head) + ".b1", {K});
            params_.add(std::string(head) + ".W2", {out, K});
            params_.add(std::string(head) + ".b2", {out});
        }
        bind();
    }

    /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere, embeddings uniform(-1, 1),
    /// LSTM forget-gate biases set to 1.
    void initialize(Rng& rng) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& t = params_[i];
            const std::string& n = params_.name(i);
            if (n == "embedding") {
                init_uniform(t, 1, rng);
            } else if (t.shape.size() == 2) {
                init_uniform(t, t.cols(), rng);
            } else {
                // vectors take the fan-in of their sibling matrix: x.b -> x.W, x.b1 -> x.W1
                const auto dot = n.rfind('.');
                const std::string leaf = n.substr(dot + 1);
                std::size_t fan_in = t.size();
                if (leaf[0] == 'b') {
                    const std::string w = n.substr(0, dot + 1) + "W" + leaf.substr(1);
                    if (params_.has(w)) fan_in = params_.get(w).cols();
                }
                init_uniform(t, fan_in, rng);
            }
        }
        set_forget_bias(idx_.repr_b, arch_.repr_hidden);
        if (arch_.recurrent_scorer) set_forget_bias(idx_.scorer_b, arch_.scorer_hidden);
    }

    static PolicyNetwork from_parameters(const Architecture& arch, ParameterSet params) {
        PolicyNetwork net(arch, params.get("embedding").rows());
        if (!net.params_.congruent(params)) throw ParseError("checkpoint parameters do not match the architecture");
        net.params_ = std::move(params);
        net.bind();
        return net;
    }

    const Architecture& arch() const { return arch_; }
    std::size_t vocab_size() const { return vocab_size_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    struct Index {
        std::size_t embedding, repr_W, repr_b, attn_W = 0, attn_b = 0, attn_v = 0, scorer_W, scorer_b;
        std::size_t verb_W1, verb_b1, verb_W2, verb_b2, noun_W1, noun_b1, noun_W2, noun_b2;
    };
    const Index& index() const { return idx_; }

private:
    void bind() {
        idx_.embedding = params_.index("embedding");
        idx_.repr_W = params_.index("repr.W");
        idx_.repr_b = params_.index("repr.b");
        if (arch_.use_attention) {
            idx_.attn_W = params_.index("attn.W");
            idx_.attn_b = params_.index("attn.b");
            idx_.attn_v = params_.index("attn.v");
        }
        idx_.scorer_W = params_.index("scorer.W");
        idx_.scorer_b = params_.index("scorer.b");
        idx_.verb_W1 = params_.index("verb.W1");
        idx_.verb_b1 = params_.index("verb.b1");
        idx_.verb_W2 = params_.index("verb.W2");
        idx_.verb_b2 = params_.index("verb.b2");
        idx_.noun_W1 = params_.index("noun.W1");
        idx_.noun_b1 = params_.index("noun.b1");
        idx_.noun_W2 = params_.index("noun.W2");
        idx_.noun_b2 = params_.index("noun.b2");
    }

    void set_forget_bias(std::size_t bias, std::size_t hidden) {
        for (std::size_t k = hidden; k < 2 * hidden; ++k) params_[bias].data[k] = 1.0;
    }

    Architecture arch_;
    std::size_t vocab_size_ = 0;
    ParameterSet params_;
    Index idx_{};
};

// ---------------------------------------------------------------------------
// Representation generator: token ids -> context vector.

struct ContextCache {
    TokenIds ids;
    Tensor inputs;  // N x E
    LstmSequenceCache lstm;
    Tensor hs;
    AttentionCache attention;
};

inline Vec encode_context(const PolicyNetwork& net, const TokenIds& ids, ContextCache* cache = nullptr,
                          Vec* attention_weights = nullptr) {
    if (ids.empty()) throw ContractError("encode_context: empty token sequence");
    const auto& p = net.params();
    const auto& ix = net.index();
    const Tensor& emb = p[ix.embedding];
    const std::size_t E = emb.cols(), H = net.arch().repr_hidden;
    Tensor x({ids.size(), E});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto id = static_cast<std::size_t>(ids[t]);
        if (id >= emb.rows()) throw ContractError("token id " + std::to_string(id) + " outside the embedding table");
        std::copy(emb.row(id), emb.row(id) + E, x.row(t));
    }
    Tensor hs = lstm_forward(p[ix.repr_W], p[ix.repr_b], x, LstmState::zeros(H), cache ? &cache->lstm : nullptr);
    Vec ctx;
    if (net.arch().use_attention) {
        ctx = attention_forward(p[ix.attn_W], p[ix.attn_b], p[ix.attn_v], hs, cache ? &cache->attention : nullptr,
                                attention_weights);
    } else {
        ctx.assign(hs.row(hs.rows() - 1), hs.row(hs.rows() - 1) + H);
        if (attention_weights) attention_weights->clear();
    }
    if (cache) {
        cache->ids = ids;
        cache->inputs = std::move(x);
        cache->hs = std::move(hs);
    }
    return ctx;
}

inline void context_backward(const PolicyNetwork& net, const ContextCache& cache, std::span<const double> dctx,
                             ParameterSet& grads) {
    const auto& p = net.params();
    const auto& ix = net.index();
    const std::size_t N = cache.hs.rows(), H = cache.hs.cols();
    Tensor dhs({N, H});
    if (net.arch().use_attention) {
        dhs = attention_backward(p[ix.attn_W], p[ix.attn_v], cache.attention, dctx, grads[ix.attn_W],
                                 grads[ix.attn_b], grads[ix.attn_v]);
    } else {
        std::copy(dctx.begin(), dctx.end(), dhs.row(N - 1));
    }
    Tensor dx({N, cache.inputs.cols()});
    lstm_backward(p[ix.repr_W], cache.lstm, dhs, grads[ix.repr_W], grads[ix.repr_b], dx);
    Tensor& demb = grads[ix.embedding];
    for (std::size_t t = 0; t < N; ++t) {
        double* row = demb.row(static_cast<std::size_t>(cache.ids[t]));
        for (std::size_t k = 0; k < dx.cols(); ++k) row[k] += dx(t, k);
    }
}

// ---------------------------------------------------------------------------
// Action scorer and heads: context vector -> Q-values.

struct QValues {
    Vec verb;
    Vec noun;
};

struct ScorerCache {
    DenseCache mlp;
    LstmStepCache lstm;
    Vec scorer_out;
    DenseCache verb1, verb2, noun1, noun2;
};

/// One scorer step. For the recurrent scorer `state` is read and replaced by the new state;
/// the MLP scorer ignores it.
inline QValues score_context(const PolicyNetwork& net, std::span<const double> ctx, LstmState& state,
                             ScorerCache* cache = nullptr) {
    const auto& p = net.params();
    const auto& ix = net.index();
    Vec s;
    if (net.arch().recurrent_scorer) {
        state = lstm_step(p[ix.scorer_W], p[ix.scorer_b], ctx, state, cache ? &cache->lstm : nullptr);
        s = state.h;
    } else {
        s = dense_forward(p[ix.scorer_W], p[ix.scorer_b], ctx, true, cache ? &cache->mlp : nullptr);
    }
    QValues q;
    Vec hv = dense_forward(p[ix.verb_W1], p[ix.verb_b1], s, true, cache ? &cache->verb1 : nullptr);
    q.verb = dense_forward(p[ix.verb_W2], p[ix.verb_b2], hv, false, cache ? &cache->verb2 : nullptr);
    Vec hn = dense_forward(p[ix.noun_W1], p[ix.noun_b1], s, true, cache ? &cache->noun1 : nullptr);
    q.noun = dense_forward(p[ix.noun_W2], p[ix.noun_b2], hn, false, cache ? &cache->noun2 : nullptr);
    if (cache) cache->scorer_out = std::move(s);
    return q;
}

/// Backward through heads and scorer for one step. `dstate` carries the gradient w.r.t. this
/// step's output state (recurrent scorer) and is replaced by the gradient w.r.t. the incoming
/// state. Returns d(loss)/d(context).
inline Vec score_backward(const PolicyNetwork& net, const ScorerCache& cache, std::span<const double> dverb,
                          std::span<const double> dnoun, LstmState& dstate, ParameterSet& grads) {
    const auto& p = net.params();
    const auto& ix = net.index();
    Vec dhv = dense_backward(p[ix.verb_W2], cache.verb2, dverb, false, grads[ix.verb_W2], grads[ix.verb_b2]);
    Vec ds = dense_backward(p[ix.verb_W1], cache.verb1, dhv, true, grads[ix.verb_W1], grads[ix.verb_b1]);
    Vec dhn = dense_backward(p[ix.noun_W2], cache.noun2, dnoun, false, grads[ix.noun_W2], grads[ix.noun_b2]);
    Vec ds2 = dense_backward(p[ix.noun_W1], cache.noun1, dhn, true, grads[ix.noun_W1], grads[ix.noun_b1]);
    for (std::size_t k = 0; k < ds.size(); ++k) ds[k] += ds2[k];
    Vec dctx(net.arch().repr_hidden, 0.0);
    if (net.arch().recurrent_scorer) {
        for (std::size_t k = 0; k < ds.size(); ++k) ds[k] += dstate.h[k];
        dstate = lstm_step_backward(p[ix.scorer_W], cache.lstm, ds, dstate.c, grads[ix.scorer_W], grads[ix.scorer_b],
                                    dctx);
    } else {
        dctx = dense_backward(p[ix.scorer_W], cache.mlp, ds, true, grads[ix.scorer_W], grads[ix.scorer_b]);
    }
    return dctx;
}

inline LstmState initial_agent_state(const PolicyNetwork& net) { return LstmState::zeros(net.arch().scorer_hidden); }

struct AgentOutput {
    QValues q;
    Vec attention;  // empty when attention is disabled
    LstmState state;
};

/// Full forward pass for one observation.
inline AgentOutput forward(const PolicyNetwork& net, const TokenIds& ids, const LstmState& state) {
    AgentOutput out;
    Vec ctx = encode_context(net, ids, nullptr, &out.attention);
    out.state = state;
    out.q = score_context(net, ctx, out.state);
    return out;
}

// ---------------------------------------------------------------------------
// Action selection.

struct ActionCommand {
    std::size_t verb = 0;
    std::size_t noun = 0;

    bool operator==(const ActionCommand&) const = default;
};

inline double q_joint(double q_verb, double q_noun) { return (q_verb + q_noun) / 2.0; }

inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// With probability epsilon an independent uniform verb and noun, otherwise per-head argmax
/// (lowest index wins ties). Draws nothing from `rng` when epsilon is 0.
inline ActionCommand select_action(const QValues& q, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.uniform() < epsilon) return {rng.index(q.verb.size()), rng.index(q.noun.size())};
    return {argmax(q.verb), argmax(q.noun)};
}

inline std::string command_text(const ActionCommand& a, const CommandGrammar& g) {
    return g.verbs.at(a.verb) + " " + g.nouns.at(a.noun);
}

/// Network plus the vocabulary and grammar it was trained with; the unit that is checkpointed.
struct Policy {
    PolicyNetwork net;
    Vocabulary vocab;
    CommandGrammar grammar;

    nlohmann::json to_json() const {
        nlohmann::json j = parameters_to_json(net.params());
        j["architecture"] = net.arch();
        j["vocabulary"] = vocab.to_json();
        j["grammar"] = grammar;
        return j;
    }

    static Policy from_json(const nlohmann::json& j) {
        Policy p;
        p.net = PolicyNetwork::from_parameters(j.at("architecture").get<Architecture>(), parameters_from_json(j));
        p.vocab = Vocabulary::from_json(j.at("vocabulary"));
        p.grammar = j.at("grammar").get<CommandGrammar>();
        return p;
    }
};

}  // namespace crest
