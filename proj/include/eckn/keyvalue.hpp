#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eckn/error.hpp"

namespace eckn {

// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string fmt_double(double v);

// Line-oriented key=value text with [section] headers and '#' comments.
// Section and key order is preserved for deterministic serialization.
class KeyValueFile {
public:
    using Entries = std::vector<std::pair<std::string, std::string>>;

    static KeyValueFile parse_string(const std::string& text, const std::string& origin = "<string>");
    static KeyValueFile parse_file(const std::string& path);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    const std::string& get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key) const;
    std::int64_t get_int_or(const std::string& section, const std::string& key,
                            std::int64_t fallback) const;
    std::uint64_t get_u64_or(const std::string& section, const std::string& key,
                             std::uint64_t fallback) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
    // comma-separated list of reals
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_list_or(const std::string& section, const std::string& key,
                                    const std::vector<double>& fallback) const;

    std::vector<std::string> section_names() const;
    std::vector<std::string> keys(const std::string& section) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set(const std::string& section, const std::string& key, double value);
    void set(const std::string& section, const std::string& key, std::int64_t value);
    void set_u64(const std::string& section, const std::string& key, std::uint64_t value);

    std::string serialize() const;
    void write(const std::string& path) const;

private:
    const Entries* find_section(const std::string& section) const;
    Entries& section_entries(const std::string& section);
    std::vector<std::pair<std::string, Entries>> sections_;
};

// FNV-1a hash of a string, hex-encoded; used for config fingerprints.
std::uint64_t fnv1a(const std::string& s);
std::string hash_hex(std::uint64_t h);

} // namespace eckn
