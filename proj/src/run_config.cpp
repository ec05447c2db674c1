#include "gazeconv/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gazeconv/errors.hpp"

namespace gazeconv {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw FormatError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("config line " + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        }
        config.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.contains(key);
}

std::string KeyValueConfig::get(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) {
        return fallback;
    }
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key,
                                  double fallback) const {
    if (!has(section, key)) {
        return fallback;
    }
    const std::string text = get(section, key, "");
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || text.empty()) {
        throw ConfigError("config [" + section + "] " + key + ": not a number: '" + text +
                          "'");
    }
    return v;
}

long KeyValueConfig::get_long(const std::string& section, const std::string& key,
                              long fallback) const {
    if (!has(section, key)) {
        return fallback;
    }
    const std::string text = get(section, key, "");
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || text.empty()) {
        throw ConfigError("config [" + section + "] " + key + ": not an integer: '" + text +
                          "'");
    }
    return v;
}

bool KeyValueConfig::get_bool(const std::string& section, const std::string& key,
                              bool fallback) const {
    if (!has(section, key)) {
        return fallback;
    }
    const std::string text = get(section, key, "");
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError("config [" + section + "] " + key + ": not a boolean: '" + text + "'");
}

void KeyValueConfig::set(const std::string& section, const std::string& key,
                         const std::string& value) {
    sections_[section][key] = value;
}

void KeyValueConfig::set_double(const std::string& section, const std::string& key,
                                double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    set(section, key, buf);
}

void KeyValueConfig::set_long(const std::string& section, const std::string& key,
                              long value) {
    set(section, key, std::to_string(value));
}

void KeyValueConfig::set_bool(const std::string& section, const std::string& key,
                              bool value) {
    set(section, key, value ? "true" : "false");
}

std::string KeyValueConfig::serialize() const {
    std::string out;
    for (const auto& [section, entries] : sections_) {
        if (!section.empty()) {
            out += '[' + section + "]\n";
        }
        for (const auto& [key, value] : entries) {
            out += key + " = " + value + '\n';
        }
        out += '\n';
    }
    return out;
}

void KeyValueConfig::write_file(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write config " + path.string());
    }
    out << serialize();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace gazeconv
