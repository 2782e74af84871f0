#pragma once

// Checkpoints are JSON documents. Each parameter is stored as
//   {"name": ..., "rows": r, "cols": c, "values": [row-major decimals]}
// Numbers are written in shortest round-trip form, so load(save(x)) == x
// bit for bit.

#include "tppmix/autodiff.hpp"

#include "json.hpp"

#include <filesystem>

namespace tppmix::nn {

using json = nlohmann::json;

json parameters_to_json(const ParameterList& params);

/// Loads values into existing parameters. Names and shapes must match.
void parameters_from_json(const json& doc, const ParameterList& params);

void write_json_file(const std::filesystem::path& path, const json& doc);
json read_json_file(const std::filesystem::path& path);

}  // namespace tppmix::nn
