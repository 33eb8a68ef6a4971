#pragma once

// Internal JSON Lines helpers. Not installed.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "radsynth/common/digest.hpp"

namespace radsynth::jsonl {

using json = nlohmann::json;

inline std::vector<json> read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

inline std::string dump_lines(const std::vector<json>& rows) {
    std::string text;
    for (const auto& row : rows) {
        text += row.dump();
        text.push_back('\n');
    }
    return text;
}

inline void write(const std::filesystem::path& path, const std::vector<json>& rows) {
    write_text_file(path, dump_lines(rows));
}

}  // namespace radsynth::jsonl
