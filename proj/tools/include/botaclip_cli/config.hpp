#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "botaclip/evaluation.hpp"
#include "botaclip/synthetic.hpp"
#include "botaclip/training.hpp"

namespace botaclip::cli {

using nlohmann::json;

// Everything a subcommand may read. One seed drives every stage; stages
// draw from their own substreams.
struct RunConfig {
  std::uint64_t seed = 0;
  bool normalize_on_load = true;

  int folds = 5;
  int fold = 0;
  double cell_size = kDefaultCellSize;

  ArchitectureConfig arch;
  TrainConfig train;
  BotaniaTrainConfig botania;
  BotaspConfig botasp;
  EvalConfig eval;
  SyntheticConfig synth;
};

// Every key with its current value. dump() of this object is the canonical
// form that gets hashed.
json to_json(const RunConfig& cfg);

// Missing keys keep their defaults; unknown keys and wrongly typed values
// throw BadConfig.
RunConfig config_from_json(const json& doc);

// key.path=value; value is parsed as JSON when possible, else taken as a
// string. The path must already exist in the schema.
void apply_override(json& doc, const std::string& assignment);

// file (optional) < overrides
RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides);

std::string config_hash(const RunConfig& cfg);

}  // namespace botaclip::cli
