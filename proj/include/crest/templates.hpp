#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace crest {

/// Sentence pools used to render goals and observations.
///
/// Placeholders: `{adj}` and `{room}` in intro and goal templates, `{dir}` in exit templates.
/// Flavor sentences are action-irrelevant filler and must not mention directions or the coin.
/// The same pools ship as plain-text files under data/templates (one sentence per line).
struct TemplatePools {
    std::vector<std::string> room_names;
    std::vector<std::string> adjectives;
    std::vector<std::string> intros;
    std::vector<std::string> exits;
    std::vector<std::string> flavor;
    std::vector<std::string> coin;
    std::vector<std::string> goals;
    std::string victory = "You pick up the coin. Congratulations, you have won!";

    static const TemplatePools& builtin() {
        static const TemplatePools pools = make_builtin();
        return pools;
    }

    /// Reads rooms.txt, adjectives.txt, intros.txt, exits.txt, flavor.txt, coin.txt and goals.txt.
    static TemplatePools load(const std::filesystem::path& dir) {
        TemplatePools p;
        p.room_names = read_lines(dir / "rooms.txt");
        p.adjectives = read_lines(dir / "adjectives.txt");
        p.intros = read_lines(dir / "intros.txt");
        p.exits = read_lines(dir / "exits.txt");
        p.flavor = read_lines(dir / "flavor.txt");
        p.coin = read_lines(dir / "coin.txt");
        p.goals = read_lines(dir / "goals.txt");
        p.validate();
        return p;
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        write_lines(dir / "rooms.txt", room_names);
        write_lines(dir / "adjectives.txt", adjectives);
        write_lines(dir / "intros.txt", intros);
        write_lines(dir / "exits.txt", exits);
        write_lines(dir / "flavor.txt", flavor);
        write_lines(dir / "coin.txt", coin);
        write_lines(dir / "goals.txt", goals);
    }

    void validate() const {
        if (room_names.size() < 16) throw ParseError("template pools need at least 16 room names");
        if (adjectives.size() < 8) throw ParseError("template pools need at least 8 adjectives");
        if (flavor.size() < 20) throw ParseError("template pools need at least 20 flavor sentences");
        if (intros.empty() || exits.empty() || coin.empty() || goals.empty())
            throw ParseError("template pools must not be empty");
        for (const auto& e : exits)
            if (e.find("{dir}") == std::string::npos) throw ParseError("exit template without {dir}: " + e);
    }

private:
    static std::vector<std::string> read_lines(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open template file " + path.string());
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) lines.push_back(line);
        }
        return lines;
    }

    static void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
        std::ofstream out(path);
        for (const auto& l : lines) out << l << '\n';
    }

    static TemplatePools make_builtin() {
        TemplatePools p;
        p.room_names = {"kitchen", "studio",  "pantry",  "bedroom", "bathroom", "cellar",   "attic",    "garage",
                        "library", "parlor",  "lounge",  "office",  "workshop", "chamber",  "closet",   "hallway",
                        "foyer",   "gallery", "nursery", "laundry", "vault",    "salon",    "scullery", "sauna",
                        "shed",    "den",     "loft",    "study",   "canteen",  "pavilion", "armory",   "chapel"};
        p.adjectives = {"balmy", "cold", "dusty", "bright", "quiet", "cozy", "damp", "spotless", "chilly", "messy",
                        "grand", "tiny"};
        p.intros = {"You've entered a {adj} {room}.", "You find yourself in a {adj} {room}.",
                    "Well, here we are in the {adj} {room}.", "You arrive in a {adj} {room}."};
        p.exits = {"You need an unguarded exit? You should try going {dir}.",
                   "There is an unguarded exit to the {dir}.",
                   "Why not try going {dir}, that entranceway is unblocked.",
                   "There is an exit to the {dir}. Don't worry, it is unguarded."};
        p.flavor = {"You try to gain information on your surroundings by using a technique you call looking.",
                    "You can barely contain your excitement.",
                    "It seems like somebody left in a hurry.",
                    "A faint smell of old paper hangs in the air.",
                    "You wonder idly who left that here.",
                    "The silence here is almost unsettling.",
                    "What a typical kind of place.",
                    "You hear the distant hum of machinery.",
                    "Dust motes dance lazily in a beam of light.",
                    "This place feels oddly familiar.",
                    "You feel a sudden urge to sit down and rest.",
                    "Somebody has scribbled a poem on a napkin.",
                    "The wallpaper is peeling in several places.",
                    "A clock ticks steadily somewhere nearby.",
                    "You notice a strange painting of a ship.",
                    "The air is warm and slightly humid.",
                    "Your footsteps echo softly.",
                    "A cat sleeps curled up beside a lamp.",
                    "Everything here is neatly arranged.",
                    "You recall a song your grandmother used to sing.",
                    "The lights flicker for a moment.",
                    "A pile of newspapers sits forgotten.",
                    "This is the sort of place where nothing happens.",
                    "You sense that adventure is close."};
        p.coin = {"You see a coin on the floor.", "A shiny coin lies here.", "There is a coin here, glinting."};
        p.goals = {"Retrieve the coin in the {adj} {room}.", "Your task is to find the coin in the {adj} {room}.",
                   "Find the coin. It is in the {adj} {room}."};
        return p;
    }
};

}  // namespace crest
