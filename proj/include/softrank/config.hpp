#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "softrank/io.hpp"

namespace softrank {

/// Raised for malformed documents, unknown keys and bad values.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

/// INI-style key/value document checked against a fixed schema:
///
///   [section]
///   key = value   # comment
///
/// Every key must be declared in the schema; declared keys keep their
/// defaults unless set. Lists are comma-separated.
class Config {
public:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
    };

    Config() = default;
    explicit Config(std::vector<Entry> schema) : entries_(std::move(schema)) {}

    void declare(const std::string& section, const std::string& key, const std::string& default_value) {
        entries_.push_back({section, key, default_value});
    }

    bool has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        Entry* e = find(section, key);
        if (!e) throw ConfigError("unknown config key '" + section + "." + key + "'");
        e->value = value;
    }

    /// "section.key=value"
    void set_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
        set(detail::trim(assignment.substr(0, dot)), detail::trim(assignment.substr(dot + 1, eq - dot - 1)),
            detail::trim(assignment.substr(eq + 1)));
    }

    void parse(std::istream& in, const std::string& origin) {
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const std::string where = origin + ":" + std::to_string(line_no);
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
                section = detail::trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            if (!find(section, key)) throw ConfigError(where + ": unknown key '" + section + "." + key + "'");
            set(section, key, detail::trim(line.substr(eq + 1)));
        }
    }

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config '" + path + "'");
        parse(in, path);
    }

    const std::string& get(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) throw ConfigError("config key '" + section + "." + key + "' is not declared");
        return e->value;
    }

    double get_double(const std::string& section, const std::string& key) const {
        try {
            return parse_double(get(section, key), section + "." + key);
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
    }

    std::int64_t get_int(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        std::int64_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ConfigError(section + "." + key + ": '" + v + "' is not an integer");
        return out;
    }

    std::uint64_t get_seed(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        std::uint64_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ConfigError(section + "." + key + ": '" + v + "' is not a nonnegative integer");
        return out;
    }

    bool get_bool(const std::string& section, const std::string& key) const {
        const std::string& v = get(section, key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(section + "." + key + ": '" + v + "' is not a boolean");
    }

    std::vector<std::string> get_list(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& cell : split(get(section, key), ',')) {
            const std::string t = detail::trim(cell);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

    std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_list(section, key)) {
            try {
                out.push_back(parse_double(s, section + "." + key));
            } catch (const IoError& e) {
                throw ConfigError(e.what());
            }
        }
        return out;
    }

    std::vector<std::int64_t> get_ints(const std::string& section, const std::string& key) const {
        std::vector<std::int64_t> out;
        for (const auto& s : get_doubles(section, key)) {
            if (s != static_cast<double>(static_cast<std::int64_t>(s)))
                throw ConfigError(section + "." + key + ": expected integers");
            out.push_back(static_cast<std::int64_t>(s));
        }
        return out;
    }

    /// Fully resolved document in declaration order.
    std::string echo() const {
        std::string out;
        std::string section = "\x01";
        for (const auto& e : entries_) {
            if (e.section != section) {
                if (!out.empty()) out += '\n';
                out += "[" + e.section + "]\n";
                section = e.section;
            }
            out += e.key + " = " + e.value + "\n";
        }
        return out;
    }

private:
    const Entry* find(const std::string& section, const std::string& key) const {
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) return &e;
        return nullptr;
    }
    Entry* find(const std::string& section, const std::string& key) {
        for (auto& e : entries_)
            if (e.section == section && e.key == key) return &e;
        return nullptr;
    }

    std::vector<Entry> entries_;
};

}  // namespace softrank
