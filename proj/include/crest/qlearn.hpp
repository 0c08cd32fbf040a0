#pragma once

#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "agent.hpp"
#include "optim.hpp"
#include "textenv.hpp"

namespace crest {

struct TrainSchedule {
    int total_epochs = 6000;
    int anneal_epochs = 3600;
    double epsilon_start = 1.0;
    double epsilon_end = 0.2;
    double gamma = 0.9;
    double bonus = 1.0;
    int games_per_epoch = 16;
    int batch_size = 16;
    int updates_per_epoch = 1;
    int eval_period = 50;
    double learning_rate = 1e-3;
    double clip_norm = 5.0;
    std::size_t replay_transitions = 10000;
    std::size_t replay_episodes = 500;
    /// Stop at the first evaluation where every training game is solved.
    bool stop_when_train_solved = false;

    void validate() const {
        if (anneal_epochs > total_epochs) throw ContractError("anneal_epochs must not exceed total_epochs");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ContractError("gamma must lie in (0, 1)");
        if (epsilon_start < epsilon_end) throw ContractError("epsilon_start must be >= epsilon_end");
        if (eval_period <= 0 || batch_size <= 0 || games_per_epoch <= 0) throw ContractError("bad schedule sizes");
    }
};

inline void to_json(nlohmann::json& j, const TrainSchedule& s) {
    j = {{"total_epochs", s.total_epochs},
         {"anneal_epochs", s.anneal_epochs},
         {"epsilon_start", s.epsilon_start},
         {"epsilon_end", s.epsilon_end},
         {"gamma", s.gamma},
         {"bonus", s.bonus},
         {"games_per_epoch", s.games_per_epoch},
         {"batch_size", s.batch_size},
         {"updates_per_epoch", s.updates_per_epoch},
         {"eval_period", s.eval_period},
         {"learning_rate", s.learning_rate},
         {"clip_norm", s.clip_norm},
         {"replay_transitions", s.replay_transitions},
         {"replay_episodes", s.replay_episodes},
         {"stop_when_train_solved", s.stop_when_train_solved}};
}

inline void from_json(const nlohmann::json& j, TrainSchedule& s) {
    TrainSchedule d;
    s.total_epochs = j.value("total_epochs", d.total_epochs);
    s.anneal_epochs = j.value("anneal_epochs", d.anneal_epochs);
    s.epsilon_start = j.value("epsilon_start", d.epsilon_start);
    s.epsilon_end = j.value("epsilon_end", d.epsilon_end);
    s.gamma = j.value("gamma", d.gamma);
    s.bonus = j.value("bonus", d.bonus);
    s.games_per_epoch = j.value("games_per_epoch", d.games_per_epoch);
    s.batch_size = j.value("batch_size", d.batch_size);
    s.updates_per_epoch = j.value("updates_per_epoch", d.updates_per_epoch);
    s.eval_period = j.value("eval_period", d.eval_period);
    s.learning_rate = j.value("learning_rate", d.learning_rate);
    s.clip_norm = j.value("clip_norm", d.clip_norm);
    s.replay_transitions = j.value("replay_transitions", d.replay_transitions);
    s.replay_episodes = j.value("replay_episodes", d.replay_episodes);
    s.stop_when_train_solved = j.value("stop_when_train_solved", d.stop_when_train_solved);
}

/// Linear from epsilon_start at epoch 0 to epsilon_end at anneal_epochs, constant afterwards.
inline double anneal_epsilon(int epoch, const TrainSchedule& s) {
    if (epoch >= s.anneal_epochs) return s.epsilon_end;
    if (epoch <= 0) return s.epsilon_start;
    const double frac = static_cast<double>(epoch) / static_cast<double>(s.anneal_epochs);
    return s.epsilon_start + (s.epsilon_end - s.epsilon_start) * frac;
}

/// Per-episode set of observation hashes.
class EpisodeMemory {
public:
    bool insert(const std::string& observation) { return seen_.insert(hash_text(observation)).second; }
    void clear() { seen_.clear(); }
    std::size_t size() const { return seen_.size(); }

private:
    std::unordered_set<std::uint64_t> seen_;
};

/// beta the first time an observation is seen within the episode, 0 afterwards.
inline double discovery_bonus(EpisodeMemory& memory, const std::string& observation, double beta) {
    return memory.insert(observation) ? beta : 0.0;
}

/// r + gamma * (max Q_verb' + max Q_noun') / 2, or r alone at episode end.
inline double bellman_target(double r_total, double gamma, std::span<const double> q_verb_next,
                             std::span<const double> q_noun_next, bool done) {
    if (done) return r_total;
    const double mv = *std::max_element(q_verb_next.begin(), q_verb_next.end());
    const double mo = *std::max_element(q_noun_next.begin(), q_noun_next.end());
    return r_total + gamma * q_joint(mv, mo);
}

// ---------------------------------------------------------------------------
// Observation encoding.

/// Maps the tokens of a raw observation to the tokens the agent sees (pruning hook).
using TokenFilter = std::function<TokenList(const TokenList&)>;

/// One game as seen by an agent: the world, and an optional filter applied to observations.
/// The goal statement is never filtered.
struct GameView {
    std::shared_ptr<const WorldGraph> world;
    TokenFilter filter;
};

/// Memoized raw text -> token ids for one game.
class StateEncoder {
public:
    StateEncoder(const Vocabulary& vocab, std::string goal, TokenFilter filter)
        : vocab_(&vocab), goal_tokens_(tokenize(goal)), filter_(std::move(filter)) {}

    const TokenIds& encode(const std::string& observation) {
        auto it = memo_.find(observation);
        if (it != memo_.end()) return it->second;
        TokenList obs = tokenize(observation);
        if (filter_) obs = filter_(obs);
        return memo_.emplace(observation, encode_state(goal_tokens_, obs, *vocab_)).first->second;
    }

private:
    const Vocabulary* vocab_;
    TokenList goal_tokens_;
    TokenFilter filter_;
    std::unordered_map<std::string, TokenIds> memo_;
};

/// Context vectors keyed by token sequence; valid while parameters are frozen.
class ContextMemo {
public:
    explicit ContextMemo(const PolicyNetwork& net) : net_(&net) {}

    const Vec& get(const TokenIds& ids) {
        auto it = memo_.find(ids);
        if (it != memo_.end()) return it->second;
        return memo_.emplace(ids, encode_context(*net_, ids)).first->second;
    }

private:
    const PolicyNetwork* net_;
    std::map<TokenIds, Vec> memo_;
};

// ---------------------------------------------------------------------------
// Trajectories.

/// One episode of one game. states has one more entry than actions: states[t+1] is the
/// observation reached by actions[t].
struct Trajectory {
    std::size_t game_id = 0;
    std::vector<std::string> observations;  // raw environment texts, parallel to states
    std::vector<TokenIds> states;
    std::vector<ActionCommand> actions;
    std::vector<std::string> commands;
    std::vector<double> env_rewards;
    std::vector<double> bonuses;
    std::vector<std::uint8_t> dones;
    bool solved = false;

    std::size_t length() const { return actions.size(); }
    double total_env_reward() const {
        double s = 0;
        for (double r : env_rewards) s += r;
        return s;
    }
};

struct RolloutOptions {
    double epsilon = 0.0;
    bool use_bonus = true;
    double beta = 1.0;
};

/// Runs one episode from reset until done (coin taken or max_steps).
inline Trajectory rollout(const Policy& policy, TextEnv& env, StateEncoder& encoder, const RolloutOptions& opts,
                          Rng& rng, ContextMemo* memo = nullptr, std::size_t game_id = 0) {
    ContextMemo local(policy.net);
    ContextMemo& contexts = memo ? *memo : local;
    Trajectory traj;
    traj.game_id = game_id;
    auto start = env.reset();
    EpisodeMemory memory;
    memory.insert(start.observation);
    traj.observations.push_back(start.observation);
    traj.states.push_back(encoder.encode(start.observation));
    LstmState state = initial_agent_state(policy.net);
    bool done = false;
    while (!done) {
        const Vec& ctx = contexts.get(traj.states.back());
        QValues q = score_context(policy.net, ctx, state);
        ActionCommand a = select_action(q, opts.epsilon, rng);
        std::string cmd = command_text(a, policy.grammar);
        StepResult res = env.step(cmd);
        const double bonus = opts.use_bonus ? discovery_bonus(memory, res.observation, opts.beta) : 0.0;
        traj.actions.push_back(a);
        traj.commands.push_back(std::move(cmd));
        traj.env_rewards.push_back(res.reward);
        traj.bonuses.push_back(bonus);
        traj.dones.push_back(res.done ? 1 : 0);
        traj.observations.push_back(res.observation);
        traj.states.push_back(encoder.encode(res.observation));
        done = res.done;
    }
    traj.solved = !traj.env_rewards.empty() && traj.env_rewards.back() == 1.0;
    return traj;
}

// ---------------------------------------------------------------------------
// TD loss.

/// Transitions [begin, end) of a trajectory. The recurrent scorer starts from a zero state at
/// `begin`, so recurrent training uses whole episodes (begin = 0).
struct Segment {
    const Trajectory* traj = nullptr;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Mean squared error between Q(s, a) and the Bellman target over every transition of every
/// segment. Targets are treated as constants: either computed from the same forward pass or
/// taken from `fixed_targets` (flattened in segment order). When `grads` is given the exact
/// gradient is accumulated into it, backpropagating through time across each segment.
inline double td_loss(const PolicyNetwork& net, std::span<const Segment> segments, double gamma,
                      ParameterSet* grads = nullptr, const std::vector<double>* fixed_targets = nullptr,
                      std::vector<double>* targets_out = nullptr) {
    std::map<TokenIds, std::size_t> unique;
    std::vector<ContextCache> ctx_cache;
    std::vector<Vec> ctx;
    auto context_of = [&](const TokenIds& ids) {
        auto [it, fresh] = unique.emplace(ids, ctx.size());
        if (fresh) {
            ctx_cache.emplace_back();
            ctx.push_back(encode_context(net, ids, grads ? &ctx_cache.back() : nullptr));
        }
        return it->second;
    };

    struct StepRecord {
        std::size_t ctx_index;
        ScorerCache cache;
        QValues q;
    };
    std::vector<std::vector<StepRecord>> records(segments.size());
    std::size_t n = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const Segment& seg = segments[s];
        if (!seg.traj || seg.end <= seg.begin || seg.end > seg.traj->length())
            throw ContractError("td_loss: empty or out-of-range segment");
        n += seg.end - seg.begin;
        LstmState state = initial_agent_state(net);
        for (std::size_t t = seg.begin; t <= seg.end; ++t) {
            StepRecord rec;
            rec.ctx_index = context_of(seg.traj->states[t]);
            rec.q = score_context(net, ctx[rec.ctx_index], state, grads ? &rec.cache : nullptr);
            records[s].push_back(std::move(rec));
        }
    }

    std::vector<double> targets;
    std::vector<double> preds;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const Segment& seg = segments[s];
        for (std::size_t t = seg.begin; t < seg.end; ++t) {
            const auto& rec = records[s][t - seg.begin];
            const auto& next = records[s][t - seg.begin + 1];
            const ActionCommand& a = seg.traj->actions[t];
            preds.push_back(q_joint(rec.q.verb[a.verb], rec.q.noun[a.noun]));
            targets.push_back(bellman_target(seg.traj->env_rewards[t] + seg.traj->bonuses[t], gamma, next.q.verb,
                                             next.q.noun, seg.traj->dones[t] != 0));
        }
    }
    if (fixed_targets) {
        if (fixed_targets->size() != targets.size()) throw ContractError("td_loss: fixed target count mismatch");
        targets = *fixed_targets;
    }
    if (targets_out) *targets_out = targets;

    double loss = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) loss += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    loss /= static_cast<double>(n);
    if (!grads) return loss;

    std::vector<Vec> dctx(ctx.size(), Vec(net.arch().repr_hidden, 0.0));
    std::size_t flat = preds.size();
    for (std::size_t s = segments.size(); s-- > 0;) {
        const Segment& seg = segments[s];
        const std::size_t len = seg.end - seg.begin;
        flat -= len;
        LstmState dstate = initial_agent_state(net);
        for (std::size_t t = seg.end; t-- > seg.begin;) {
            const std::size_t i = flat + (t - seg.begin);
            const double dq = 2.0 * (preds[i] - targets[i]) / static_cast<double>(n);
            Vec dv(net.arch().n_verbs, 0.0), dn(net.arch().n_nouns, 0.0);
            dv[seg.traj->actions[t].verb] = 0.5 * dq;
            dn[seg.traj->actions[t].noun] = 0.5 * dq;
            const auto& rec = records[s][t - seg.begin];
            Vec dc = score_backward(net, rec.cache, dv, dn, dstate, *grads);
            Vec& acc = dctx[rec.ctx_index];
            for (std::size_t k = 0; k < dc.size(); ++k) acc[k] += dc[k];
        }
    }
    for (std::size_t c = 0; c < ctx.size(); ++c) context_backward(net, ctx_cache[c], dctx[c], *grads);
    return loss;
}

/// One optimizer step on the TD loss. Throws NumericError on a non-finite loss.
inline double q_update(PolicyNetwork& net, Adam& optimizer, std::span<const Segment> segments, double gamma,
                       double clip_norm, ParameterSet& grads) {
    grads.zero();
    const double loss = td_loss(net, segments, gamma, &grads);
    if (!std::isfinite(loss)) throw NumericError("non-finite TD loss (" + std::to_string(loss) + ")");
    clip_grad_norm(grads, clip_norm);
    optimizer.step(net.params(), grads);
    return loss;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct EvalResult {
    double success_rate = 0.0;
    std::size_t solved = 0;
    std::size_t games = 0;
    double mean_steps_solved = 0.0;
    std::vector<Trajectory> trajectories;
};

/// Greedy (epsilon = 0), bonus off.
inline EvalResult evaluate_policy(const Policy& policy, const std::vector<GameView>& games, const EnvOptions& env_opts,
                                  bool keep_trajectories = false) {
    if (games.empty()) throw ContractError("evaluation needs at least one game");
    EvalResult r;
    r.games = games.size();
    ContextMemo memo(policy.net);
    Rng unused(0);
    double steps = 0;
    for (std::size_t g = 0; g < games.size(); ++g) {
        TextEnv env(*games[g].world, TemplatePools::builtin(), env_opts);
        StateEncoder enc(policy.vocab, env.goal(), games[g].filter);
        Trajectory t = rollout(policy, env, enc, {0.0, false, 0.0}, unused, &memo, g);
        if (t.solved) {
            ++r.solved;
            steps += static_cast<double>(t.length());
        }
        if (keep_trajectories) r.trajectories.push_back(std::move(t));
    }
    r.success_rate = static_cast<double>(r.solved) / static_cast<double>(r.games);
    r.mean_steps_solved = r.solved ? steps / static_cast<double>(r.solved) : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Training loop.

struct MetricsRow {
    int epoch = 0;
    double epsilon = 0;
    double loss = 0;
    double train_success = 0;
    double val_success = 0;
    double mean_steps_solved = 0;
};

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "epoch,epsilon,loss,train_success,val_success,mean_steps_solved\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.8f,%.6f,%.6f,%.4f\n", r.epoch, r.epsilon, r.loss, r.train_success,
                      r.val_success, r.mean_steps_solved);
        out += buf;
    }
    return out;
}

struct TrainResult {
    Policy best;
    int best_epoch = -1;
    double best_val_success = -1.0;
    double best_train_success = 0.0;
    /// Highest training success (earliest on ties): the overfitted policy EATA is read from.
    Policy fitted;
    int fitted_epoch = -1;
    double fitted_train_success = -1.0;
    std::vector<MetricsRow> metrics;
    int epochs_run = 0;
};

/// Fixed-capacity ring of recent episodes.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Trajectory t) {
        if (items_.size() == capacity_) items_.pop_front();
        items_.push_back(std::move(t));
    }

    std::size_t size() const { return items_.size(); }
    const Trajectory& operator[](std::size_t i) const { return items_[i]; }

private:
    std::size_t capacity_;
    std::deque<Trajectory> items_;
};

/// Transition-level replay for the feed-forward scorer.
class TransitionReplay {
public:
    explicit TransitionReplay(std::size_t capacity) : capacity_(capacity) {}

    void push(const Trajectory& t) {
        for (std::size_t i = 0; i < t.length(); ++i) {
            Trajectory one;
            one.game_id = t.game_id;
            one.states = {t.states[i], t.states[i + 1]};
            one.actions = {t.actions[i]};
            one.env_rewards = {t.env_rewards[i]};
            one.bonuses = {t.bonuses[i]};
            one.dones = {t.dones[i]};
            if (items_.size() == capacity_) items_.pop_front();
            items_.push_back(std::move(one));
        }
    }

    std::size_t size() const { return items_.size(); }
    const Trajectory& operator[](std::size_t i) const { return items_[i]; }

private:
    std::size_t capacity_;
    std::deque<Trajectory> items_;
};

struct TrainOptions {
    TrainSchedule schedule;
    EnvOptions env;
    std::uint64_t seed = 0;
    /// Called after every evaluation (progress reporting).
    std::function<void(const MetricsRow&)> on_eval;
    /// Called with each epoch's exploration rollouts.
    std::function<void(int epoch, const std::vector<Trajectory>&)> on_rollouts;
};

/// Q-learning over `train_games`; returns the parameters with the best validation success
/// (ties keep the earliest). With no validation games, training success selects. The
/// parameters with the best training success are returned alongside.
inline TrainResult train(const std::vector<GameView>& train_games, const std::vector<GameView>& val_games,
                         Policy policy, const TrainOptions& opts) {
    const TrainSchedule& sched = opts.schedule;
    sched.validate();
    if (train_games.empty()) throw ContractError("train: no training games");
    for (const auto& v : val_games)
        for (const auto& t : train_games)
            if (v.world == t.world || v.world->seed == t.world->seed)
                throw ContractError("train: validation game also in the training set");

    Rng explore_rng(derive_seed(opts.seed, "explore"));
    Rng game_rng(derive_seed(opts.seed, "games"));
    Rng replay_rng(derive_seed(opts.seed, "replay"));

    std::vector<TextEnv> envs;
    std::vector<StateEncoder> encoders;
    envs.reserve(train_games.size());
    for (const auto& g : train_games) {
        envs.emplace_back(*g.world, TemplatePools::builtin(), opts.env);
        encoders.emplace_back(policy.vocab, envs.back().goal(), g.filter);
    }

    Adam optimizer(policy.net.params(), {sched.learning_rate});
    ParameterSet grads = policy.net.params().zeros_like();
    ReplayBuffer episodes(sched.replay_episodes);
    TransitionReplay transitions(sched.replay_transitions);
    const bool recurrent = policy.net.arch().recurrent_scorer;

    TrainResult result;
    result.best = policy;
    result.fitted = policy;
    double loss_sum = 0;
    int loss_count = 0;
    for (int epoch = 0; epoch < sched.total_epochs; ++epoch) {
        const double eps = anneal_epsilon(epoch, sched);
        {
            ContextMemo memo(policy.net);
            std::vector<Trajectory> fresh;
            for (int k = 0; k < sched.games_per_epoch; ++k) {
                const std::size_t g = game_rng.index(train_games.size());
                fresh.push_back(rollout(policy, envs[g], encoders[g], {eps, true, sched.bonus}, explore_rng, &memo, g));
            }
            if (opts.on_rollouts) opts.on_rollouts(epoch, fresh);
            for (auto& t : fresh) {
                if (recurrent)
                    episodes.push(std::move(t));
                else
                    transitions.push(t);
            }
        }
        for (int u = 0; u < sched.updates_per_epoch; ++u) {
            std::vector<Segment> batch;
            if (recurrent) {
                for (int b = 0; b < sched.batch_size; ++b) {
                    const Trajectory& t = episodes[replay_rng.index(episodes.size())];
                    batch.push_back({&t, 0, t.length()});
                }
            } else {
                for (int b = 0; b < sched.batch_size; ++b) {
                    const Trajectory& t = transitions[replay_rng.index(transitions.size())];
                    batch.push_back({&t, 0, 1});
                }
            }
            loss_sum += q_update(policy.net, optimizer, batch, sched.gamma, sched.clip_norm, grads);
            ++loss_count;
        }
        result.epochs_run = epoch + 1;

        if ((epoch + 1) % sched.eval_period == 0 || epoch + 1 == sched.total_epochs) {
            MetricsRow row;
            row.epoch = epoch + 1;
            row.epsilon = eps;
            row.loss = loss_count ? loss_sum / loss_count : 0.0;
            loss_sum = 0;
            loss_count = 0;
            EvalResult tr = evaluate_policy(policy, train_games, opts.env);
            row.train_success = tr.success_rate;
            double selection = tr.success_rate;
            if (!val_games.empty()) {
                EvalResult va = evaluate_policy(policy, val_games, opts.env);
                row.val_success = va.success_rate;
                row.mean_steps_solved = va.mean_steps_solved;
                selection = va.success_rate;
            } else {
                row.mean_steps_solved = tr.mean_steps_solved;
            }
            result.metrics.push_back(row);
            if (opts.on_eval) opts.on_eval(row);
            if (selection > result.best_val_success) {
                result.best_val_success = selection;
                result.best_train_success = tr.success_rate;
                result.best_epoch = epoch + 1;
                result.best = policy;
            }
            if (tr.success_rate > result.fitted_train_success) {
                result.fitted_train_success = tr.success_rate;
                result.fitted_epoch = epoch + 1;
                result.fitted = policy;
            }
            if (sched.stop_when_train_solved && tr.success_rate == 1.0) break;
        }
    }
    return result;
}

}  // namespace crest
