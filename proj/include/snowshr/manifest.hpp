#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/version.hpp"

namespace snowshr {

// One manifest per command run, written next to the outputs. Timestamps make
// manifests intentionally non-reproducible, so determinism checks compare
// the data files and skip the manifest.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

    void add_config(const std::string& key, const std::string& value) {
        config.emplace_back(key, value);
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        out << "command=" << command << "\n";
        out << "version=" << kVersion << "\n";
        out << "seed=" << seed << "\n";
        for (const auto& [k, v] : config) out << "config." << k << "=" << v << "\n";
        for (const auto& p : inputs) out << "input=" << p << "\n";
        for (const auto& p : outputs) out << "output=" << p << "\n";
        out << "started=" << iso8601(started) << "\n";
        out << "finished=" << iso8601(std::chrono::system_clock::now()) << "\n";
        if (!out) throw IoError("failed writing '" + path + "'");
    }

  private:
    static std::string iso8601(std::chrono::system_clock::time_point tp) {
        const std::time_t t = std::chrono::system_clock::to_time_t(tp);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }
};

}  // namespace snowshr
