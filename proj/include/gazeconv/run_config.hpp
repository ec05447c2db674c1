#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace gazeconv {

// Flat key=value configuration with [section] headers; '#' starts a
// comment. Every run writes its fully resolved configuration (defaults
// included) next to its outputs, so a run is reproducible from the sidecar.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig parse_file(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_long(const std::string& section, const std::string& key, long value);
    void set_bool(const std::string& section, const std::string& key, bool value);

    std::string serialize() const;
    void write_file(const std::filesystem::path& path) const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

} // namespace gazeconv
