#pragma once

// Tiny key=value configuration: top-level keys plus [preset.NAME] sections.
//
//   seed = 7
//   threads = 2
//   out = results
//   [preset.wide-se]
//   T = 12
//   theta1 = 0.8
//   theta2 = 0.5
//   theta3 = 0.02
//   smooth_sigma = 0

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "segnoise/error.hpp"
#include "segnoise/noise.hpp"

namespace segnoise {

struct FileConfig {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  std::map<std::string, MarkovNoiseParams> presets;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) throw InvalidArgument(where + ": cannot parse '" + text + "'");
  return v;
}

}  // namespace detail

inline FileConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  FileConfig cfg;
  MarkovNoiseParams* section = nullptr;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string where = name + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidArgument(where + ": unterminated section header");
      const auto title = detail::trim(line.substr(1, line.size() - 2));
      if (title.rfind("preset.", 0) != 0 || title.size() == 7)
        throw InvalidArgument(where + ": unknown section [" + title + "]");
      auto [it, fresh] = cfg.presets.try_emplace(title.substr(7));
      if (!fresh) throw InvalidArgument(where + ": duplicate section [" + title + "]");
      it->second.steps = 0;
      section = &it->second;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (section) {
      if (key == "T")
        section->steps = detail::parse_number<std::uint32_t>(value, where);
      else if (key == "theta1")
        section->expansion = detail::parse_number<double>(value, where);
      else if (key == "theta2")
        section->marching = detail::parse_number<double>(value, where);
      else if (key == "theta3")
        section->flipping = detail::parse_number<double>(value, where);
      else if (key == "smooth_sigma")
        section->smooth_sigma = detail::parse_number<double>(value, where);
      else
        throw InvalidArgument(where + ": unknown preset key '" + key + "'");
    } else if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(value, where);
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<std::size_t>(value, where);
    } else if (key == "out") {
      cfg.out = value;
    } else {
      throw InvalidArgument(where + ": unknown key '" + key + "'");
    }
  }
  for (auto& [preset_name, p] : cfg.presets) {
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(name + ": preset " + preset_name + ": " + e.what());
    }
  }
  return cfg;
}

inline FileConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

}  // namespace segnoise
