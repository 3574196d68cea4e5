#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "config.hpp"

namespace jrlat {

inline constexpr const char* version = "0.1.0";

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string code_version = version;
    std::string started, finished;
    std::vector<std::string> outputs;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    std::vector<std::string> warnings;

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["code_version"] = code_version;
        j["started"] = started;
        j["finished"] = finished;
        j["outputs"] = outputs;
        j["summary"] = summary;
        j["warnings"] = warnings;
        return j;
    }

    void write(const std::filesystem::path& dir) const
    {
        std::ofstream f(dir / "manifest.json");
        if (!f) throw Error("cannot write manifest in '" + dir.string() + "'");
        f << to_json().dump(2) << "\n";
    }
};

/// Comma-separated table with one header row; every row gets the time and manifest hash columns.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns, std::string hash)
        : f_(path), hash_(std::move(hash))
    {
        if (!f_) throw Error("cannot open '" + path.string() + "' for writing");
        f_ << "time";
        for (const auto& c : columns) f_ << "," << c;
        f_ << ",manifest\n";
    }

    void row(double t, const std::vector<double>& values)
    {
        f_ << detail::fmt(t);
        for (double v : values) f_ << "," << detail::fmt(v);
        f_ << "," << hash_ << "\n";
    }

    /// Row with a leading text field (e.g. a label column declared first in the header).
    void row(double t, const std::string& label, const std::vector<double>& values)
    {
        f_ << detail::fmt(t) << "," << label;
        for (double v : values) f_ << "," << detail::fmt(v);
        f_ << "," << hash_ << "\n";
    }

private:
    std::ofstream f_;
    std::string hash_;
};

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path) : f_(path)
    {
        if (!f_) throw Error("cannot open '" + path.string() + "' for writing");
    }
    void write(const nlohmann::ordered_json& j) { f_ << j.dump() << "\n"; }

private:
    std::ofstream f_;
};

/// Reads a table written by CsvWriter back into named numeric columns (non-numeric fields become NaN).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return int(i);
        throw Error("CSV column '" + name + "' not found");
    }
};

inline CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw Error("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream ss(s);
        while (std::getline(ss, cur, ',')) out.push_back(cur);
        return out;
    };
    if (!std::getline(f, line)) throw Error("empty CSV '" + path.string() + "'");
    t.header = split(line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        for (const auto& s : split(line)) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            r.push_back(end == s.c_str() + s.size() && !s.empty() ? v : std::nan(""));
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace jrlat
