#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace crest {

using Vec = std::vector<double>;

/// Dense row-major array of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    Vec data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(count(shape), 0.0) {}

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    const double* row(std::size_t i) const { return data.data() + i * cols(); }
    double* row(std::size_t i) { return data.data() + i * cols(); }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

/// Ordered collection of named tensors. Gradients and optimizer moments use the same layout.
class ParameterSet {
public:
    std::size_t add(const std::string& name, std::vector<std::size_t> shape) {
        if (index_.count(name)) throw ContractError("duplicate parameter " + name);
        index_.emplace(name, tensors_.size());
        names_.push_back(name);
        tensors_.emplace_back(std::move(shape));
        return tensors_.size() - 1;
    }

    std::size_t size() const { return tensors_.size(); }
    Tensor& operator[](std::size_t i) { return tensors_[i]; }
    const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("no parameter named " + name);
        return it->second;
    }

    Tensor& get(const std::string& name) { return tensors_[index(name)]; }
    const Tensor& get(const std::string& name) const { return tensors_[index(name)]; }

    ParameterSet zeros_like() const {
        ParameterSet z;
        for (std::size_t i = 0; i < size(); ++i) z.add(names_[i], tensors_[i].shape);
        return z;
    }

    void zero() {
        for (auto& t : tensors_) t.zero();
    }

    std::size_t total_count() const {
        std::size_t n = 0;
        for (const auto& t : tensors_) n += t.size();
        return n;
    }

    bool congruent(const ParameterSet& other) const {
        if (size() != other.size()) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (names_[i] != other.names_[i] || tensors_[i].shape != other.tensors_[i].shape) return false;
        return true;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// uniform(-k, k), k = 1/sqrt(fan_in)
inline void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& x : t.data) x = rng.uniform(-k, k);
}

inline constexpr int kCheckpointFormatVersion = 1;

// Values are stored as hex bit patterns so a save/load round trip is bit-exact.
inline std::string encode_doubles(const Vec& v) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(v.size() * 16);
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        for (int shift = 60; shift >= 0; shift -= 4) s.push_back(hex[(bits >> shift) & 0xf]);
    }
    return s;
}

inline Vec decode_doubles(const std::string& s) {
    if (s.size() % 16 != 0) throw ParseError("checkpoint array has a truncated value");
    Vec v(s.size() / 16);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t bits = 0;
        for (std::size_t k = 0; k < 16; ++k) {
            char c = s[i * 16 + k];
            int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : -1;
            if (d < 0) throw ParseError("checkpoint array has a non-hex digit");
            bits = (bits << 4) | static_cast<std::uint64_t>(d);
        }
        std::memcpy(&v[i], &bits, sizeof bits);
    }
    return v;
}

inline nlohmann::json parameters_to_json(const ParameterSet& p) {
    nlohmann::json arrays = nlohmann::json::array();
    for (std::size_t i = 0; i < p.size(); ++i)
        arrays.push_back({{"name", p.name(i)}, {"shape", p[i].shape}, {"data", encode_doubles(p[i].data)}});
    return {{"format_version", kCheckpointFormatVersion}, {"arrays", arrays}};
}

inline ParameterSet parameters_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
        throw ParseError("unsupported checkpoint format version " + j.at("format_version").dump());
    ParameterSet p;
    for (const auto& a : j.at("arrays")) {
        auto idx = p.add(a.at("name").get<std::string>(), a.at("shape").get<std::vector<std::size_t>>());
        p[idx].data = decode_doubles(a.at("data").get<std::string>());
        if (p[idx].data.size() != Tensor::count(p[idx].shape))
            throw ParseError("checkpoint array " + p.name(idx) + " does not match its shape");
    }
    return p;
}

}  // namespace crest
