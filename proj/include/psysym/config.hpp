#pragma once

// Pipeline configuration: a TOML subset (sections, key = value, strings,
// numbers, booleans, flat arrays) with PSYSYM_<SECTION>_<KEY> environment
// overrides.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "psysym/common.hpp"

namespace psysym {

using ConfigScalar = std::variant<bool, double, std::string>;
using ConfigValue = std::variant<bool, double, std::string, std::vector<ConfigScalar>>;

namespace detail {

inline ConfigScalar parse_scalar(std::string_view raw, const std::string& where) {
    const std::string v = trim(raw);
    if (v.empty()) throw ParseError(where + ": missing value");
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"' || v.front() == '\'') {
        if (v.size() < 2 || v.back() != v.front()) throw ParseError(where + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && v.front() == '"' && i + 2 < v.size()) {
                const char c = v[++i];
                out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
            } else {
                out += v[i];
            }
        }
        return out;
    }
    return parse_double(v, where);
}

// Drops a trailing comment, ignoring '#' inside quotes.
inline std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

inline std::vector<std::string> split_array_items(std::string_view body) {
    std::vector<std::string> items;
    std::string cur;
    char quote = 0;
    for (char c : body) {
        if (quote) {
            cur += c;
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
            cur += c;
        } else if (c == ',') {
            items.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) items.push_back(cur);
    return items;
}

inline ConfigValue parse_value(std::string_view raw, const std::string& where) {
    const std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw ParseError(where + ": unterminated array");
        std::vector<ConfigScalar> out;
        for (const auto& item : split_array_items(std::string_view(v).substr(1, v.size() - 2))) {
            out.push_back(parse_scalar(item, where));
        }
        return out;
    }
    return std::visit([](auto&& x) -> ConfigValue { return x; }, parse_scalar(v, where));
}

inline bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!(is_alnum(c) || c == '_' || c == '-')) return false;
    }
    return true;
}

}  // namespace detail

class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "config") {
        Config cfg;
        std::string section;
        std::size_t line_no = 0;
        for (auto line : split(text, '\n')) {
            ++line_no;
            const std::string where = origin + ":" + std::to_string(line_no);
            line = trim(detail::strip_comment(line));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ParseError(where + ": malformed section header");
                section = trim(std::string_view(line).substr(1, line.size() - 2));
                if (!detail::valid_key(section)) throw ParseError(where + ": bad section name '" + section + "'");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
            const std::string key = trim(std::string_view(line).substr(0, eq));
            if (!detail::valid_key(key)) throw ParseError(where + ": bad key '" + key + "'");
            if (section.empty()) throw ParseError(where + ": key '" + key + "' outside any section");
            const std::string full = section + "." + key;
            if (cfg.values_.count(full)) throw ParseError(where + ": duplicate key '" + full + "'");
            cfg.values_[full] = detail::parse_value(std::string_view(line).substr(eq + 1), where);
        }
        return cfg;
    }

    static Config load(const std::string& path) { return parse(read_file(path), path); }

    // PSYSYM_<SECTION>_<KEY>=value overrides existing or adds new keys. The
    // value is parsed like a config value; unparseable text is kept as a string.
    void apply_env(const char* const* envp) {
        if (!envp) return;
        for (auto e = envp; *e; ++e) {
            const std::string_view kv(*e);
            if (kv.rfind("PSYSYM_", 0) != 0) continue;
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos) continue;
            const std::string name = to_lower(kv.substr(7, eq - 7));
            const auto us = name.find('_');
            if (us == std::string::npos || us == 0 || us + 1 == name.size()) continue;
            const std::string full = name.substr(0, us) + "." + name.substr(us + 1);
            const std::string raw(kv.substr(eq + 1));
            try {
                values_[full] = detail::parse_value(raw, "environment " + std::string(kv.substr(0, eq)));
            } catch (const ParseError&) {
                values_[full] = raw;
            }
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }
    const std::map<std::string, ConfigValue>& values() const { return values_; }

    std::string get_string(const std::string& key, const std::string& def = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto s = std::get_if<std::string>(&it->second)) return *s;
        if (auto d = std::get_if<double>(&it->second)) return format_double(*d);
        throw ValidationError("config key '" + key + "' must be a string");
    }

    double get_double(const std::string& key, double def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto d = std::get_if<double>(&it->second)) return *d;
        if (auto s = std::get_if<std::string>(&it->second)) return parse_double(*s, key);
        throw ValidationError("config key '" + key + "' must be a number");
    }

    std::size_t get_size(const std::string& key, std::size_t def) const {
        const double d = get_double(key, static_cast<double>(def));
        if (d < 0 || d != std::floor(d)) throw ValidationError("config key '" + key + "' must be a non-negative integer");
        return static_cast<std::size_t>(d);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto s = std::get_if<std::string>(&it->second)) return std::stoull(*s);
        return get_size(key, 0);
    }

    bool get_bool(const std::string& key, bool def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto b = std::get_if<bool>(&it->second)) return *b;
        if (auto s = std::get_if<std::string>(&it->second)) {
            if (*s == "true" || *s == "1") return true;
            if (*s == "false" || *s == "0") return false;
        }
        throw ValidationError("config key '" + key + "' must be a boolean");
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        auto arr = std::get_if<std::vector<ConfigScalar>>(&it->second);
        if (!arr) throw ValidationError("config key '" + key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : *arr) {
            auto d = std::get_if<double>(&x);
            if (!d) throw ValidationError("config key '" + key + "' must be an array of numbers");
            out.push_back(*d);
        }
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (auto s = std::get_if<std::string>(&it->second)) return {*s};
        auto arr = std::get_if<std::vector<ConfigScalar>>(&it->second);
        if (!arr) throw ValidationError("config key '" + key + "' must be an array of strings");
        std::vector<std::string> out;
        for (const auto& x : *arr) {
            auto s = std::get_if<std::string>(&x);
            if (!s) throw ValidationError("config key '" + key + "' must be an array of strings");
            out.push_back(*s);
        }
        return out;
    }

    // Resolved path; relative paths are taken from the config file's directory.
    std::string get_path(const std::string& key, const std::string& def = {}) const {
        std::string p = get_string(key, def);
        if (p.empty() || base_dir_.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
    }

    void set_base_dir(std::string dir) { base_dir_ = std::move(dir); }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        auto scalar = [](const ConfigScalar& s) {
            return std::visit([](auto&& x) { return nlohmann::json(x); }, s);
        };
        for (const auto& [k, v] : values_) {
            if (auto arr = std::get_if<std::vector<ConfigScalar>>(&v)) {
                nlohmann::json a = nlohmann::json::array();
                for (const auto& x : *arr) a.push_back(scalar(x));
                j[k] = a;
            } else {
                j[k] = std::visit(
                    [&](auto&& x) -> nlohmann::json {
                        using T = std::decay_t<decltype(x)>;
                        if constexpr (std::is_same_v<T, std::vector<ConfigScalar>>) return nullptr;
                        else return x;
                    },
                    v);
            }
        }
        return j;
    }

private:
    std::map<std::string, ConfigValue> values_;
    std::string base_dir_;
};

}  // namespace psysym
