#include "botaclip_cli/manifest.hpp"

#include <algorithm>

#include "botaclip/io.hpp"

namespace botaclip::cli {

namespace {

json hashes(const std::vector<std::pair<std::string, fs::path>>& entries) {
  json out = json::array();
  for (const auto& [role, path] : entries) {
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        out.push_back({{"role", role}, {"path", f.lexically_relative(path.parent_path()).generic_string()},
                       {"sha256", sha256_file(f)}});
      }
    } else {
      out.push_back({{"role", role}, {"path", path.filename().generic_string()}, {"sha256", sha256_file(path)}});
    }
  }
  return out;
}

}  // namespace

json manifest_json(const Manifest& m, const RunConfig& cfg) {
  json j;
  j["command"] = m.command;
  j["seed"] = cfg.seed;
  j["config_sha256"] = config_hash(cfg);
  j["config"] = to_json(cfg);
  j["inputs"] = hashes(m.inputs);
  j["outputs"] = hashes(m.outputs);
  return j;
}

void write_manifest(const fs::path& path, const Manifest& m, const RunConfig& cfg) {
  write_text(path, manifest_json(m, cfg).dump(2) + "\n");
}

fs::path manifest_path_for(const fs::path& output) {
  if (fs::is_directory(output)) return output / "manifest.json";
  fs::path p = output;
  p += ".manifest.json";
  return p;
}

}  // namespace botaclip::cli
