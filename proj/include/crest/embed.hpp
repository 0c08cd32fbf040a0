#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "lexicon.hpp"

namespace crest {

/// Pretrained word vectors in the common text format (word2vec/GloVe/ConceptNet Numberbatch).
struct EmbeddingTable {
    std::string name;
    std::size_t dim = 0;
    std::unordered_map<std::string, std::vector<double>> vectors;

    const std::vector<double>* find(const std::string& token) const {
        auto it = vectors.find(token);
        return it == vectors.end() ? nullptr : &it->second;
    }

    bool contains(const std::string& token) const { return vectors.count(token) != 0; }

    /// Throws if any grammar token lacks a vector.
    void require_tokens(const std::vector<std::string>& tokens) const {
        std::string missing;
        for (const auto& t : tokens)
            if (!contains(t)) missing += (missing.empty() ? "" : ", ") + t;
        if (!missing.empty())
            throw ParseError("embedding table '" + name + "' has no vectors for action tokens: " + missing);
    }
};

/// One entry per line: token followed by D components. An optional first line "count dim" is
/// skipped. Duplicate tokens keep their first vector. Tokens are lowercased.
inline EmbeddingTable load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = {},
                                      std::string name = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open embedding file " + path.string());
    EmbeddingTable table;
    table.name = name.empty() ? path.stem().string() : std::move(name);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        std::vector<double> vec;
        std::string field;
        while (ss >> field) {
            char* end = nullptr;
            double x = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0')
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
            vec.push_back(x);
        }
        if (lineno == 1 && vec.size() == 1) {
            // "count dim" header
            char* end = nullptr;
            std::strtoul(token.c_str(), &end, 10);
            if (*end == '\0') {
                if (!expected_dim) expected_dim = static_cast<std::size_t>(vec[0]);
                continue;
            }
        }
        if (vec.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": entry has no components");
        if (table.dim == 0) {
            table.dim = vec.size();
            if (expected_dim && *expected_dim != table.dim)
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(*expected_dim) + " components, got " + std::to_string(vec.size()));
        } else if (vec.size() != table.dim) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.dim) +
                             " components, got " + std::to_string(vec.size()));
        }
        for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        table.vectors.emplace(std::move(token), std::move(vec));
    }
    if (table.vectors.empty()) throw ParseError("embedding file " + path.string() + " is empty");
    return table;
}

/// Cosine similarity; 0 when either vector is all zeros.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ContractError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot / std::sqrt(na * nb);
    return std::clamp(c, -1.0, 1.0);
}

/// Cosine of the stored vectors, or 0 if either token is out of vocabulary.
inline double token_similarity(const EmbeddingTable& table, const std::string& w, const std::string& a) {
    const auto* vw = table.find(w);
    const auto* va = table.find(a);
    if (!vw || !va) return 0.0;
    return cosine(*vw, *va);
}

/// Directory holding optional large vector files; overridable with CREST_EMBEDDINGS_DIR.
inline std::filesystem::path embeddings_dir(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("CREST_EMBEDDINGS_DIR"); env && *env) return env;
    return fallback;
}

}  // namespace crest
