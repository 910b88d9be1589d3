#pragma once

// CSV/JSON emission with bit-exact reproducibility: doubles are written with
// 17 significant digits, and every data file is paired with a manifest
// (command line, seed, tool version, output checksum).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace diqkd::io {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_string() const {
        std::ostringstream os;
        for (size_t c = 0; c < columns.size(); ++c)
            os << (c ? "," : "") << columns[c];
        os << "\n";
        for (const auto& row : rows) {
            for (size_t c = 0; c < row.size(); ++c)
                os << (c ? "," : "") << format_double(row[c]);
            os << "\n";
        }
        return os.str();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = kSchemaVersion;
        j["columns"] = columns;
        j["rows"] = rows;
        return j;
    }

    static Csv parse(const std::string& text) {
        Csv out;
        std::istringstream is(text);
        std::string line;
        if (!std::getline(is, line))
            throw std::runtime_error("Csv::parse: empty input");
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) out.columns.push_back(cell);
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<double> row;
            std::istringstream ls(line);
            while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
            if (row.size() != out.columns.size())
                throw std::runtime_error("Csv::parse: ragged row");
            out.rows.push_back(std::move(row));
        }
        return out;
    }
};

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string checksum_hex(const std::string& data) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << data;
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// Writes <out_path>.manifest.json next to the emitted data file.
inline void write_manifest(const std::string& out_path, const std::string& command,
                           const std::vector<std::string>& argv, std::uint64_t seed,
                           const std::string& data) {
    nlohmann::json m;
    m["schema_version"] = kSchemaVersion;
    m["tool"] = "diqkd";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["argv"] = argv;
    m["seed"] = seed;
    m["output"] = out_path;
    m["output_checksum_fnv1a64"] = checksum_hex(data);
    write_file(out_path + ".manifest.json", m.dump(2) + "\n");
}

} // namespace diqkd::io
