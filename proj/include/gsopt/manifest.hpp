#pragma once

// Run manifest written next to every command's outputs.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"

namespace gsopt {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  int exit_code = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "gsopt";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["seeds"] = seeds;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    j["exit_code"] = exit_code;
    return j;
  }

  static RunManifest from_json(const nlohmann::ordered_json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.exit_code = j.value("exit_code", 0);
    return m;
  }

  void save(const std::filesystem::path& path) const { write_file(path, to_json().dump(2) + "\n"); }

  static RunManifest load(const std::filesystem::path& path) {
    try {
      return from_json(nlohmann::ordered_json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ": invalid manifest: " + e.what());
    }
  }
};

}  // namespace gsopt
