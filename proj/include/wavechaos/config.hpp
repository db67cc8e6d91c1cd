#pragma once

// Key-value configuration files.
//
// Grammar (one entry per line):
//   line    := blank | comment | entry
//   comment := '#' anything
//   entry   := key '=' value [comment]
//   key     := [a-z_][a-z0-9_.]*
//   value   := non-empty text, surrounding whitespace trimmed
// Keys may appear once. Unknown keys are reported by unused_keys().

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wavechaos {

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text)
    {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto s = trim(line);
            if (s.empty()) continue;
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            auto key = trim(s.substr(0, eq));
            auto val = trim(s.substr(eq + 1));
            if (!valid_key(key))
                throw ConfigError("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
            if (val.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
            if (c.values_.count(key))
                throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
            c.values_[key] = val;
        }
        return c;
    }

    static Config load(const std::string& path)
    {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& def) const
    {
        auto it = find(key);
        return it ? *it : def;
    }

    double get_double(const std::string& key, double def) const
    {
        auto it = find(key);
        if (!it) return def;
        double v = 0;
        auto r = std::from_chars(it->data(), it->data() + it->size(), v);
        if (r.ec != std::errc() || r.ptr != it->data() + it->size())
            throw ConfigError("key '" + key + "': not a number: " + *it);
        return v;
    }

    long long get_int(const std::string& key, long long def) const
    {
        auto it = find(key);
        if (!it) return def;
        long long v = 0;
        auto r = std::from_chars(it->data(), it->data() + it->size(), v);
        if (r.ec != std::errc() || r.ptr != it->data() + it->size())
            throw ConfigError("key '" + key + "': not an integer: " + *it);
        return v;
    }

    bool get_bool(const std::string& key, bool def) const
    {
        auto it = find(key);
        if (!it) return def;
        if (*it == "true" || *it == "1" || *it == "yes") return true;
        if (*it == "false" || *it == "0" || *it == "no") return false;
        throw ConfigError("key '" + key + "': not a boolean: " + *it);
    }

    std::vector<double> get_list(const std::string& key, const std::vector<double>& def) const
    {
        auto it = find(key);
        if (!it) return def;
        std::vector<double> out;
        std::string item;
        std::istringstream in(*it);
        while (std::getline(in, item, ',')) {
            auto s = trim(item);
            double v = 0;
            auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
                throw ConfigError("key '" + key + "': bad list entry '" + s + "'");
            out.push_back(v);
        }
        return out;
    }

    std::vector<std::string> unused_keys() const
    {
        std::vector<std::string> out;
        for (auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    const std::string* find(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    static std::string trim(const std::string& s)
    {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static bool valid_key(const std::string& k)
    {
        if (k.empty()) return false;
        if (!(k[0] == '_' || (k[0] >= 'a' && k[0] <= 'z'))) return false;
        for (char ch : k)
            if (!(ch == '_' || ch == '.' || (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9')))
                return false;
        return true;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fmt_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace wavechaos
