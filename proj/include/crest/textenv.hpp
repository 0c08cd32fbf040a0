#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "lexicon.hpp"
#include "rng.hpp"
#include "templates.hpp"

namespace crest {

enum class Mode { easy, medium, hard };
enum class Direction { north = 0, south = 1, east = 2, west = 3 };

inline constexpr std::array<Direction, 4> kDirections = {Direction::north, Direction::south, Direction::east,
                                                         Direction::west};

inline Direction reverse(Direction d) {
    switch (d) {
        case Direction::north: return Direction::south;
        case Direction::south: return Direction::north;
        case Direction::east: return Direction::west;
        case Direction::west: return Direction::east;
    }
    return d;
}

inline const char* to_string(Direction d) {
    static constexpr const char* names[] = {"north", "south", "east", "west"};
    return names[static_cast<int>(d)];
}

inline std::optional<Direction> parse_direction(const std::string& s) {
    for (auto d : kDirections)
        if (s == to_string(d)) return d;
    return std::nullopt;
}

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::easy: return "easy";
        case Mode::medium: return "medium";
        case Mode::hard: return "hard";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    if (s == "easy") return Mode::easy;
    if (s == "medium") return Mode::medium;
    if (s == "hard") return Mode::hard;
    throw ContractError("unknown mode '" + s + "' (expected easy, medium or hard)");
}

/// Dead-end neighbours attached to each non-terminal room of the optimal path.
inline int distractors_per_room(Mode m) { return m == Mode::easy ? 0 : (m == Mode::medium ? 1 : 2); }

struct Room {
    int id = 0;
    std::string name;
    std::string adjective;
};

/// Ground-truth game map. Rooms 0..L form the optimal path (start = 0, coin = L);
/// distractor rooms follow.
struct WorldGraph {
    std::vector<Room> rooms;
    std::map<std::pair<int, Direction>, int> exits;
    int start = 0;
    int coin_room = 0;
    int quest_length = 1;
    Mode mode = Mode::easy;
    std::uint64_t seed = 0;

    std::optional<int> neighbor(int room, Direction d) const {
        auto it = exits.find({room, d});
        if (it == exits.end()) return std::nullopt;
        return it->second;
    }

    std::vector<Direction> exits_of(int room) const {
        std::vector<Direction> out;
        for (auto d : kDirections)
            if (exits.count({room, d})) out.push_back(d);
        return out;
    }

    int dead_end_count() const {
        int n = 0;
        for (const auto& r : rooms)
            if (r.id != coin_room && r.id != start && exits_of(r.id).size() == 1) ++n;
        return n;
    }

    void connect(int a, Direction d, int b) {
        exits[{a, d}] = b;
        exits[{b, reverse(d)}] = a;
    }
};

/// Builds a chain of L+1 rooms with random exit directions, then hangs dead ends off
/// every path room except the coin room according to the mode.
inline WorldGraph generate_world(Mode mode, int quest_length, std::uint64_t seed,
                                 const TemplatePools& pools = TemplatePools::builtin()) {
    if (quest_length < 1) throw GenerationError("quest length must be at least 1");
    const auto path_rooms = static_cast<std::size_t>(quest_length) + 1;
    if (path_rooms > pools.room_names.size())
        throw GenerationError("quest length " + std::to_string(quest_length) + " needs " +
                              std::to_string(path_rooms) + " distinct room names but the pool has " +
                              std::to_string(pools.room_names.size()));

    Rng rng(derive_seed(seed, "world"));
    WorldGraph w;
    w.mode = mode;
    w.quest_length = quest_length;
    w.seed = seed;

    std::vector<std::string> names = pools.room_names;
    rng.shuffle(names);
    for (std::size_t i = 0; i < path_rooms; ++i)
        w.rooms.push_back({static_cast<int>(i), names[i], pools.adjectives[rng.index(pools.adjectives.size())]});
    w.start = 0;
    w.coin_room = quest_length;

    std::optional<Direction> prev;
    for (int i = 0; i < quest_length; ++i) {
        std::vector<Direction> choices;
        for (auto d : kDirections)
            if (!prev || d != reverse(*prev)) choices.push_back(d);
        Direction d = choices[rng.index(choices.size())];
        w.connect(i, d, i + 1);
        prev = d;
    }

    const int per_room = distractors_per_room(mode);
    if (per_room > 0) {
        std::vector<std::string> spare(names.begin() + static_cast<std::ptrdiff_t>(path_rooms), names.end());
        if (spare.empty()) throw GenerationError("no room names left for distractor rooms");
        for (int i = 0; i < quest_length; ++i) {
            std::vector<Direction> free;
            for (auto d : kDirections)
                if (!w.exits.count({i, d})) free.push_back(d);
            rng.shuffle(free);
            for (int k = 0; k < per_room; ++k) {
                int id = static_cast<int>(w.rooms.size());
                w.rooms.push_back({id, spare[rng.index(spare.size())], pools.adjectives[rng.index(pools.adjectives.size())]});
                w.connect(i, free[static_cast<std::size_t>(k)], id);
            }
        }
    }
    return w;
}

/// Breadth-first shortest command sequence from start to the coin, ending with "take coin".
inline std::vector<std::string> optimal_trajectory(const WorldGraph& w) {
    std::vector<int> parent(w.rooms.size(), -1);
    std::vector<Direction> via(w.rooms.size(), Direction::north);
    std::vector<bool> seen(w.rooms.size(), false);
    std::deque<int> queue{w.start};
    seen[static_cast<std::size_t>(w.start)] = true;
    while (!queue.empty()) {
        int r = queue.front();
        queue.pop_front();
        if (r == w.coin_room) break;
        for (auto d : kDirections) {
            auto n = w.neighbor(r, d);
            if (n && !seen[static_cast<std::size_t>(*n)]) {
                seen[static_cast<std::size_t>(*n)] = true;
                parent[static_cast<std::size_t>(*n)] = r;
                via[static_cast<std::size_t>(*n)] = d;
                queue.push_back(*n);
            }
        }
    }
    if (!seen[static_cast<std::size_t>(w.coin_room)]) throw ContractError("coin room unreachable from start");
    std::vector<std::string> cmds{"take coin"};
    for (int r = w.coin_room; r != w.start; r = parent[static_cast<std::size_t>(r)])
        cmds.push_back(std::string("go ") + to_string(via[static_cast<std::size_t>(r)]));
    std::reverse(cmds.begin(), cmds.end());
    return cmds;
}

/// Checks every structural invariant of a generated world; throws ContractError on the first violation.
inline void validate_world(const WorldGraph& w) {
    for (const auto& [key, to] : w.exits) {
        auto back = w.neighbor(to, reverse(key.second));
        if (!back || *back != key.first) throw ContractError("asymmetric exit");
    }
    int L = w.quest_length;
    if (static_cast<int>(optimal_trajectory(w).size()) != L + 1) throw ContractError("shortest path length != L");
    std::vector<std::string> path_names;
    for (int i = 0; i <= L; ++i) path_names.push_back(w.rooms[static_cast<std::size_t>(i)].name);
    std::sort(path_names.begin(), path_names.end());
    if (std::adjacent_find(path_names.begin(), path_names.end()) != path_names.end())
        throw ContractError("duplicate room name on the optimal path");
    int expected = distractors_per_room(w.mode);
    for (int i = 0; i < L; ++i) {
        int dead = 0;
        for (auto d : w.exits_of(i)) {
            int n = *w.neighbor(i, d);
            if (n > L) ++dead;
        }
        if (dead != expected) throw ContractError("wrong distractor count at path room " + std::to_string(i));
    }
    if (w.dead_end_count() != expected * L) throw ContractError("wrong dead-end total");
}

inline std::string fill(std::string tmpl, const std::string& key, const std::string& value) {
    for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size()))
        tmpl.replace(pos, key.size(), value);
    return tmpl;
}

struct RenderOptions {
    int flavor_min = 2;
    int flavor_max = 2;
};

/// Intro sentence first, then exit sentences, flavor sentences and (in the coin room) a coin
/// sentence in an order drawn from `rng`.
inline std::string render_observation(const WorldGraph& w, int room_id, Rng& rng,
                                      const TemplatePools& pools = TemplatePools::builtin(),
                                      const RenderOptions& opts = {}) {
    if (room_id < 0 || room_id >= static_cast<int>(w.rooms.size())) throw ContractError("room id out of range");
    const Room& room = w.rooms[static_cast<std::size_t>(room_id)];
    std::string intro = fill(fill(pools.intros[rng.index(pools.intros.size())], "{adj}", room.adjective), "{room}", room.name);

    std::vector<std::string> body;
    for (auto d : w.exits_of(room_id))
        body.push_back(fill(pools.exits[rng.index(pools.exits.size())], "{dir}", to_string(d)));

    int k = rng.range(opts.flavor_min, opts.flavor_max);
    std::vector<std::size_t> idx(pools.flavor.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    for (int i = 0; i < k && i < static_cast<int>(idx.size()); ++i) body.push_back(pools.flavor[idx[static_cast<std::size_t>(i)]]);

    if (room_id == w.coin_room) body.push_back(pools.coin[rng.index(pools.coin.size())]);
    rng.shuffle(body);

    std::string text = intro;
    for (const auto& s : body) text += " " + s;
    return text;
}

/// Per-room rendering stream: a room always renders to the same text within one world.
inline Rng room_stream(const WorldGraph& w, int room_id) {
    return Rng(derive_seed(w.seed, 0x5eedULL + static_cast<std::uint64_t>(room_id)));
}

inline std::string render_goal(const WorldGraph& w, const TemplatePools& pools = TemplatePools::builtin()) {
    Rng rng(derive_seed(w.seed, "goal"));
    const Room& coin = w.rooms[static_cast<std::size_t>(w.coin_room)];
    return fill(fill(pools.goals[rng.index(pools.goals.size())], "{adj}", coin.adjective), "{room}", coin.name);
}

struct EnvState {
    int current_room = 0;
    int steps_taken = 0;
    bool done = false;
};

struct StepResult {
    std::string observation;
    double reward = 0.0;
    bool done = false;
};

struct EnvOptions {
    int max_steps = 50;
    RenderOptions render;
};

/// One coin-collector episode. Single owner, not thread-safe; worlds may be shared.
class TextEnv {
public:
    explicit TextEnv(const WorldGraph& world, const TemplatePools& pools = TemplatePools::builtin(),
                     EnvOptions opts = {})
        : world_(&world), pools_(&pools), opts_(opts) {
        texts_.reserve(world.rooms.size());
        for (const auto& r : world.rooms) {
            Rng rng = room_stream(world, r.id);
            texts_.push_back(render_observation(world, r.id, rng, pools, opts.render));
        }
        goal_ = render_goal(world, pools);
    }

    struct Reset {
        std::string goal;
        std::string observation;
    };

    Reset reset() {
        state_ = EnvState{world_->start, 0, false};
        return {goal_, texts_[static_cast<std::size_t>(state_.current_room)]};
    }

    StepResult step(const std::string& command) {
        if (state_.done) throw ContractError("step() called on a finished episode");
        ++state_.steps_taken;
        StepResult res;
        auto toks = tokenize(command);
        if (toks.size() == 2 && toks[0] == "go") {
            if (auto d = parse_direction(toks[1])) {
                if (auto n = world_->neighbor(state_.current_room, *d)) state_.current_room = *n;
            }
        } else if (toks.size() == 2 && toks[0] == "take" && toks[1] == "coin" &&
                   state_.current_room == world_->coin_room) {
            res.reward = 1.0;
            state_.done = true;
            res.observation = pools_->victory;
        }
        if (res.observation.empty()) res.observation = texts_[static_cast<std::size_t>(state_.current_room)];
        if (state_.steps_taken >= opts_.max_steps) state_.done = true;
        res.done = state_.done;
        return res;
    }

    const EnvState& state() const { return state_; }
    const WorldGraph& world() const { return *world_; }
    const std::string& goal() const { return goal_; }
    const std::vector<std::string>& room_texts() const { return texts_; }
    const std::string& victory_text() const { return pools_->victory; }
    const EnvOptions& options() const { return opts_; }

private:
    const WorldGraph* world_;
    const TemplatePools* pools_;
    EnvOptions opts_;
    std::vector<std::string> texts_;
    std::string goal_;
    EnvState state_;
};

inline nlohmann::json world_to_json(const WorldGraph& w) {
    nlohmann::json rooms = nlohmann::json::array();
    for (const auto& r : w.rooms) rooms.push_back({{"id", r.id}, {"name", r.name}, {"adjective", r.adjective}});
    nlohmann::json exits = nlohmann::json::array();
    for (const auto& [key, to] : w.exits)
        exits.push_back({{"from", key.first}, {"direction", to_string(key.second)}, {"to", to}});
    return {{"seed", w.seed},     {"mode", to_string(w.mode)}, {"quest_length", w.quest_length}, {"rooms", rooms},
            {"exits", exits},     {"start", w.start},          {"coin_room", w.coin_room}};
}

inline WorldGraph world_from_json(const nlohmann::json& j) {
    WorldGraph w;
    w.seed = j.at("seed").get<std::uint64_t>();
    w.mode = parse_mode(j.at("mode").get<std::string>());
    w.quest_length = j.at("quest_length").get<int>();
    for (const auto& r : j.at("rooms"))
        w.rooms.push_back({r.at("id").get<int>(), r.at("name").get<std::string>(), r.at("adjective").get<std::string>()});
    for (const auto& e : j.at("exits")) {
        auto d = parse_direction(e.at("direction").get<std::string>());
        if (!d) throw ParseError("bad exit direction in world file");
        w.exits[{e.at("from").get<int>(), *d}] = e.at("to").get<int>();
    }
    w.start = j.at("start").get<int>();
    w.coin_room = j.at("coin_room").get<int>();
    return w;
}

}  // namespace crest
