#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace crest {

using TokenList = std::vector<std::string>;
using TokenIds = std::vector<int>;

/// Lowercase, drop punctuation (apostrophes inside words survive), split on whitespace.
inline TokenList tokenize(std::string_view text) {
    TokenList out;
    std::string cur;
    auto flush = [&] {
        std::size_t b = cur.find_first_not_of('\'');
        std::size_t e = cur.find_last_not_of('\'');
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
        cur.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '\'') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            flush();
        }
    }
    if (!cur.empty()) flush();
    return out;
}

inline std::string join_tokens(const TokenList& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

/// Token <-> id map. Ids 0..2 are reserved for pad, unk and the goal/observation separator.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kSep = 2;
    static constexpr int kNumSpecial = 3;

    Vocabulary() : id_to_token_{"<pad>", "<unk>", "<sep>"} {}

    static Vocabulary build(const std::vector<std::string>& corpus) {
        Vocabulary v;
        for (const auto& text : corpus)
            for (auto& t : tokenize(text)) v.add(t);
        return v;
    }

    static Vocabulary from_tokens(const std::vector<TokenList>& corpus) {
        Vocabulary v;
        for (const auto& toks : corpus)
            for (const auto& t : toks) v.add(t);
        return v;
    }

    int add(const std::string& token) {
        auto it = token_to_id_.find(token);
        if (it != token_to_id_.end()) return it->second;
        int id = static_cast<int>(id_to_token_.size());
        token_to_id_.emplace(token, id);
        id_to_token_.push_back(token);
        return id;
    }

    int id(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnk : it->second;
    }

    bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

    const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }

    std::size_t size() const { return id_to_token_.size(); }

    TokenIds encode(const TokenList& tokens) const {
        TokenIds ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) ids.push_back(id(t));
        return ids;
    }

    TokenIds encode(std::string_view text) const { return encode(tokenize(text)); }

    TokenList decode(const TokenIds& ids) const {
        TokenList out;
        for (int i : ids) out.push_back(token(i));
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t i = kNumSpecial; i < id_to_token_.size(); ++i) j[id_to_token_[i]] = i;
        return j;
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        std::vector<std::pair<int, std::string>> entries;
        for (auto it = j.begin(); it != j.end(); ++it) entries.emplace_back(it.value().get<int>(), it.key());
        std::sort(entries.begin(), entries.end());
        Vocabulary v;
        for (const auto& [id, tok] : entries) {
            if (id != static_cast<int>(v.size())) throw ParseError("vocabulary ids are not dense at id " + std::to_string(id));
            v.add(tok);
        }
        return v;
    }

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

/// ids(goal) ++ [sep] ++ ids(observation)
inline TokenIds encode_state(const TokenList& goal, const TokenList& observation, const Vocabulary& vocab) {
    TokenIds ids = vocab.encode(goal);
    ids.push_back(Vocabulary::kSep);
    for (const auto& t : observation) ids.push_back(vocab.id(t));
    return ids;
}

inline TokenIds encode_state(std::string_view goal, std::string_view observation, const Vocabulary& vocab) {
    return encode_state(tokenize(goal), tokenize(observation), vocab);
}

/// Verb x noun command space.
struct CommandGrammar {
    std::vector<std::string> verbs;
    std::vector<std::string> nouns;

    static CommandGrammar standard() {
        return {{"go", "take", "open", "look", "drop", "examine", "close", "eat", "push", "pull"},
                {"north", "south", "east", "west", "coin", "door", "exit", "table", "box", "key"}};
    }

    std::size_t size() const { return verbs.size() * nouns.size(); }

    void validate() const {
        auto has = [](const std::vector<std::string>& v, const char* t) {
            return std::find(v.begin(), v.end(), t) != v.end();
        };
        auto unique = [](std::vector<std::string> v) {
            std::sort(v.begin(), v.end());
            return std::adjacent_find(v.begin(), v.end()) == v.end();
        };
        if (verbs.size() != 10 || nouns.size() != 10) throw ContractError("grammar needs exactly 10 verbs and 10 nouns");
        if (!unique(verbs) || !unique(nouns)) throw ContractError("grammar lists must be duplicate-free");
        for (const char* v : {"go", "take"})
            if (!has(verbs, v)) throw ContractError(std::string("grammar is missing verb ") + v);
        for (const char* n : {"north", "south", "east", "west", "coin"})
            if (!has(nouns, n)) throw ContractError(std::string("grammar is missing noun ") + n);
    }

    int verb_index(const std::string& v) const {
        auto it = std::find(verbs.begin(), verbs.end(), v);
        return it == verbs.end() ? -1 : static_cast<int>(it - verbs.begin());
    }

    int noun_index(const std::string& n) const {
        auto it = std::find(nouns.begin(), nouns.end(), n);
        return it == nouns.end() ? -1 : static_cast<int>(it - nouns.begin());
    }

    std::vector<std::string> all_tokens() const {
        std::vector<std::string> all = verbs;
        all.insert(all.end(), nouns.begin(), nouns.end());
        return all;
    }
};

inline void to_json(nlohmann::json& j, const CommandGrammar& g) { j = {{"verbs", g.verbs}, {"nouns", g.nouns}}; }
inline void from_json(const nlohmann::json& j, CommandGrammar& g) {
    j.at("verbs").get_to(g.verbs);
    j.at("nouns").get_to(g.nouns);
}

}  // namespace crest
