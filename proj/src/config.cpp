#include "meaeq/config.hpp"

#include "meaeq/corpus.hpp"
#include "meaeq/error.hpp"
#include "meaeq/hash.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace meaeq {

namespace {

std::string trim_copy(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

} // namespace

const std::vector<std::string>& Config::sections() {
    static const std::vector<std::string> kSections = {"task",     "corpus", "backend", "strategy",
                                                       "budget",   "victim", "student", "seeds"};
    return kSections;
}

Config Config::parse(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorCode::Config, std::string("config parse error: ") + e.what());
    }
    Config cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) fail(ErrorCode::Config, "config key '" + section + "' must live inside a section");
        for (const auto& [key, value] : body) cfg.set(section + "." + key, trim_copy(value.data()));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    auto cfg = parse(read_file(path));
    cfg.base_dir = path.parent_path();
    return cfg;
}

void Config::set(const std::string& dotted, std::string value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) {
        fail(ErrorCode::Config, "config key '" + dotted + "' is not of the form section.key");
    }
    const auto section = dotted.substr(0, dot);
    if (std::find(sections().begin(), sections().end(), section) == sections().end()) {
        fail(ErrorCode::Config, "unknown config section [" + section + "]");
    }
    values_[dotted] = std::move(value);
}

void Config::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        fail(ErrorCode::Config, "override '" + std::string(assignment) + "' is not section.key=value");
    }
    set(trim_copy(assignment.substr(0, eq)), trim_copy(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::get(const std::string& dotted) const {
    auto it = values_.find(dotted);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_or(const std::string& dotted, const std::string& fallback) const {
    return get(dotted).value_or(fallback);
}

double Config::get_double(const std::string& dotted, double fallback) const {
    auto v = get(dotted);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        fail(ErrorCode::Config, "config value " + dotted + "='" + *v + "' is not a number");
    }
}

std::uint64_t Config::get_u64(const std::string& dotted, std::uint64_t fallback) const {
    auto v = get(dotted);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        if (!v->empty() && v->front() == '-') throw std::invalid_argument("negative");
        const auto n = std::stoull(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
        return n;
    } catch (const std::exception&) {
        fail(ErrorCode::Config, "config value " + dotted + "='" + *v + "' is not a non-negative integer");
    }
}

bool Config::get_bool(const std::string& dotted, bool fallback) const {
    auto v = get(dotted);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    fail(ErrorCode::Config, "config value " + dotted + "='" + *v + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& dotted) const {
    std::vector<std::string> out;
    auto v = get(dotted);
    if (!v) return out;
    std::size_t start = 0;
    while (start <= v->size()) {
        auto comma = v->find(',', start);
        if (comma == std::string::npos) comma = v->size();
        auto item = trim_copy(std::string_view(*v).substr(start, comma - start));
        if (!item.empty()) out.push_back(std::move(item));
        start = comma + 1;
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::uint64_t Config::digest() const { return fnv1a64(canonical()); }

std::string Config::to_ini() const {
    std::string out;
    std::string current;
    for (const auto& [k, v] : values_) {
        const auto dot = k.find('.');
        const auto section = k.substr(0, dot);
        if (section != current) {
            if (!current.empty()) out += "\n";
            out += "[" + section + "]\n";
            current = section;
        }
        out += k.substr(dot + 1) + " = " + v + "\n";
    }
    return out;
}

std::filesystem::path resolve_path(const Config& cfg, const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_absolute() || cfg.base_dir.empty()) return p;
    return cfg.base_dir / p;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace meaeq
