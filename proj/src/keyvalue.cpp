#include "eckn/keyvalue.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace eckn {

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

KeyValueFile KeyValueFile::parse_string(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            kv.section_entries(current);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (current.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key '" + key +
                              "' outside any [section]");
        if (kv.has(current, key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' in [" + current + "]");
        kv.section_entries(current).emplace_back(key, value);
    }
    return kv;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path);
}

const KeyValueFile::Entries* KeyValueFile::find_section(const std::string& section) const {
    for (const auto& [name, entries] : sections_)
        if (name == section) return &entries;
    return nullptr;
}

KeyValueFile::Entries& KeyValueFile::section_entries(const std::string& section) {
    for (auto& [name, entries] : sections_)
        if (name == section) return entries;
    sections_.emplace_back(section, Entries{});
    return sections_.back().second;
}

bool KeyValueFile::has_section(const std::string& section) const {
    return find_section(section) != nullptr;
}

bool KeyValueFile::has(const std::string& section, const std::string& key) const {
    const Entries* e = find_section(section);
    if (!e) return false;
    for (const auto& [k, v] : *e)
        if (k == key) return true;
    return false;
}

const std::string& KeyValueFile::get(const std::string& section, const std::string& key) const {
    const Entries* e = find_section(section);
    if (e)
        for (const auto& [k, v] : *e)
            if (k == key) return v;
    throw ConfigError("missing required key '" + key + "' in [" + section + "]");
}

std::string KeyValueFile::get_or(const std::string& section, const std::string& key,
                                 const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double KeyValueFile::get_double(const std::string& section, const std::string& key) const {
    const std::string& v = get(section, key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + section + "]: '" + v + "' is not a number");
    }
}

double KeyValueFile::get_double_or(const std::string& section, const std::string& key,
                                   double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t KeyValueFile::get_int(const std::string& section, const std::string& key) const {
    const std::string& v = get(section, key);
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + section + "]: '" + v + "' is not an integer");
    }
}

std::int64_t KeyValueFile::get_int_or(const std::string& section, const std::string& key,
                                      std::int64_t fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t KeyValueFile::get_u64_or(const std::string& section, const std::string& key,
                                       std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = get(section, key);
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + section + "]: '" + v +
                          "' is not an unsigned integer");
    }
}

bool KeyValueFile::get_bool_or(const std::string& section, const std::string& key,
                               bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "' in [" + section + "]: '" + v + "' is not a boolean");
}

std::vector<double> KeyValueFile::get_list(const std::string& section,
                                           const std::string& key) const {
    const std::string& v = get(section, key);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < v.size()) {
        std::size_t comma = v.find(',', pos);
        if (comma == std::string::npos) comma = v.size();
        const std::string item = trim(v.substr(pos, comma - pos));
        if (item.empty())
            throw ConfigError("key '" + key + "' in [" + section + "]: empty list item");
        try {
            std::size_t p = 0;
            out.push_back(std::stod(item, &p));
            if (p != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' in [" + section + "]: '" + item +
                              "' is not a number");
        }
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("key '" + key + "' in [" + section + "]: empty list");
    return out;
}

std::vector<double> KeyValueFile::get_list_or(const std::string& section, const std::string& key,
                                              const std::vector<double>& fallback) const {
    return has(section, key) ? get_list(section, key) : fallback;
}

std::vector<std::string> KeyValueFile::section_names() const {
    std::vector<std::string> out;
    for (const auto& [name, entries] : sections_) out.push_back(name);
    return out;
}

std::vector<std::string> KeyValueFile::keys(const std::string& section) const {
    std::vector<std::string> out;
    const Entries* e = find_section(section);
    if (e)
        for (const auto& [k, v] : *e) out.push_back(k);
    return out;
}

void KeyValueFile::set(const std::string& section, const std::string& key,
                       const std::string& value) {
    Entries& e = section_entries(section);
    for (auto& [k, v] : e)
        if (k == key) {
            v = value;
            return;
        }
    e.emplace_back(key, value);
}

void KeyValueFile::set(const std::string& section, const std::string& key, double value) {
    set(section, key, fmt_double(value));
}

void KeyValueFile::set(const std::string& section, const std::string& key, std::int64_t value) {
    set(section, key, std::to_string(value));
}

void KeyValueFile::set_u64(const std::string& section, const std::string& key,
                           std::uint64_t value) {
    set(section, key, std::to_string(value));
}

std::string KeyValueFile::serialize() const {
    std::string out;
    for (const auto& [name, entries] : sections_) {
        out += "[" + name + "]\n";
        for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
        out += "\n";
    }
    return out;
}

void KeyValueFile::write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << serialize();
    if (!f) throw IoError("write to '" + path + "' failed");
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace eckn
