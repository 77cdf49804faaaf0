#pragma once

/**
 * @file config.hpp
 * @brief Flat `key = value` configuration files.
 *
 * One entry per line, '#' starts a comment, keys are case-sensitive and the
 * last assignment wins. Values are kept as text and converted on access.
 */

#include <charconv>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "langseg/error.hpp"
#include "langseg/io.hpp"

namespace langseg {

class FlatConfig {
public:
    FlatConfig() = default;

    static FlatConfig parse(std::string_view text) {
        FlatConfig cfg;
        std::size_t pos = 0;
        int line = 0;
        while (pos <= text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos) eol = text.size();
            std::string_view raw = text.substr(pos, eol - pos);
            std::size_t lineStart = pos;
            pos = eol + 1;
            ++line;
            if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
            raw = trim(raw);
            if (raw.empty()) continue;
            auto eq = raw.find('=');
            if (eq == std::string_view::npos)
                throw FormatError("config line " + std::to_string(line) + ": expected 'key = value'", lineStart);
            std::string_view key = trim(raw.substr(0, eq));
            if (key.empty()) throw FormatError("config line " + std::to_string(line) + ": empty key", lineStart);
            cfg.values_[std::string(key)] = std::string(trim(raw.substr(eq + 1)));
        }
        return cfg;
    }

    static FlatConfig load(const std::filesystem::path& path) { return parse(io::readFile(path)); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::string getString(const std::string& key, std::string fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double getDouble(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        double v = 0.0;
        const std::string& s = it->second;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw InvalidArgument("config key '" + key + "': '" + s + "' is not a number");
        return v;
    }

    long long getInt(const std::string& key, long long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        long long v = 0;
        const std::string& s = it->second;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw InvalidArgument("config key '" + key + "': '" + s + "' is not an integer");
        return v;
    }

    bool getBool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
        if (it->second == "false" || it->second == "0" || it->second == "no") return false;
        throw InvalidArgument("config key '" + key + "': '" + it->second + "' is not a boolean");
    }

    std::string render() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    std::map<std::string, std::string> values_;
};

} // namespace langseg
