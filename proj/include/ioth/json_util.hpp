#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "ioth/errors.hpp"

namespace ioth {

using json = nlohmann::json;

inline json load_json_file(const std::string& path, const std::string& stage) {
    std::ifstream in(path);
    if (!in) throw IothError(stage, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IothError(stage, "bad json in " + path + ": " + e.what());
    }
}

inline void save_json_file(const std::string& path, const json& j, const std::string& stage) {
    std::ofstream out(path);
    if (!out) throw IothError(stage, "cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IothError(stage, "write failed for " + path);
}

// Required-field accessors with stage-tagged errors, so a malformed config
// names the stage and key instead of throwing a bare type_error.
template <typename T>
T json_require(const json& j, const std::string& key, const std::string& stage) {
    if (!j.contains(key)) throw IothError(stage, "missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IothError(stage, "field '" + key + "': " + e.what());
    }
}

template <typename T>
T json_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace ioth
