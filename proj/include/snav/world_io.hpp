#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "snav/citygraph.hpp"

namespace snav {

inline constexpr int kWorldFileVersion = 1;

nlohmann::json gen_params_to_json(const CityGenParams& p);
// Missing keys keep their defaults; the result is validated.
CityGenParams gen_params_from_json(const nlohmann::json& j);

// Versioned world document. Coordinates are written with three decimals;
// output is byte-identical for identical graphs.
std::string world_to_string(const CityGraph& g);
CityGraph world_from_string(const std::string& text);

void save_world(const CityGraph& g, const std::filesystem::path& path);
CityGraph load_world(const std::filesystem::path& path);

// Whole-file helpers shared by the readers and writers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace snav
