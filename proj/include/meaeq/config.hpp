#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace meaeq {

/// Flat "section.key" -> value view of an INI-style experiment file. Only the
/// sections [task], [corpus], [backend], [strategy], [budget], [victim],
/// [student] and [seeds] are accepted.
class Config {
public:
    static const std::vector<std::string>& sections();

    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    // `dotted` is "section.key". Throws Config for an unknown section.
    void set(const std::string& dotted, std::string value);
    // Parses "section.key=value".
    void apply_override(std::string_view assignment);

    bool has(const std::string& dotted) const { return values_.contains(dotted); }
    std::optional<std::string> get(const std::string& dotted) const;
    std::string get_or(const std::string& dotted, const std::string& fallback) const;
    double get_double(const std::string& dotted, double fallback) const;
    std::uint64_t get_u64(const std::string& dotted, std::uint64_t fallback) const;
    bool get_bool(const std::string& dotted, bool fallback) const;
    // Comma-separated list; surrounding whitespace is trimmed.
    std::vector<std::string> get_list(const std::string& dotted) const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    // One "section.key=value" line per entry in sorted order.
    std::string canonical() const;
    std::uint64_t digest() const;
    std::string to_ini() const;

    // Directory that relative paths in the file resolve against.
    std::filesystem::path base_dir;

private:
    std::map<std::string, std::string> values_;
};

std::filesystem::path resolve_path(const Config& cfg, const std::string& value);

std::string hex64(std::uint64_t v);

} // namespace meaeq
