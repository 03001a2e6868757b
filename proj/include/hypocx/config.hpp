#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypocx {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text: one assignment per line, dotted keys, `#`
/// starts a comment. Lists are comma separated. Every key read is recorded so
/// callers can reject keys nothing consumed.
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<config>") {
        Config c;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (c.values_.count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            c.values_[key] = val;
        }
        return c;
    }

    static Config parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& def) const {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? def : it->second;
    }

    [[nodiscard]] double get_double(const std::string& key, double def) const {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? def : to_double(key, it->second);
    }

    [[nodiscard]] long get_int(const std::string& key, long def) const {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return def;
        long v = 0;
        const auto& s = it->second;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
        return v;
    }

    [[nodiscard]] bool get_bool(const std::string& key, bool def) const {
        const std::string s = get_string(key, def ? "true" : "false");
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
    }

    [[nodiscard]] std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& def) const {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::vector<std::string> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) throw ConfigError("key '" + key + "': empty list element");
            out.push_back(item);
        }
        return out;
    }

    [[nodiscard]] std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) const {
        if (!has(key)) {
            used_.insert(key);
            return def;
        }
        std::vector<double> out;
        for (const auto& s : get_list(key, {})) out.push_back(to_double(key, s));
        return out;
    }

    /// Keys present in the file that no getter has asked for.
    [[nodiscard]] std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return {};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static double to_double(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

} // namespace hypocx
