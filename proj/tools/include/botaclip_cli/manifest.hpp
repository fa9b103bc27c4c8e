#pragma once

#include <string>
#include <utility>
#include <vector>

#include "botaclip_cli/config.hpp"

namespace botaclip::cli {

// Run record written next to every CLI output. Holds no timestamps, so an
// identical rerun writes an identical manifest.
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, fs::path>> inputs;   // role, path
  std::vector<std::pair<std::string, fs::path>> outputs;  // role, path; directories are walked
};

json manifest_json(const Manifest& m, const RunConfig& cfg);
void write_manifest(const fs::path& path, const Manifest& m, const RunConfig& cfg);

// <file>.manifest.json, or <dir>/manifest.json for directories.
fs::path manifest_path_for(const fs::path& output);

}  // namespace botaclip::cli
