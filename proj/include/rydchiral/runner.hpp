#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rydchiral/lattice.hpp"

namespace rydchiral {

using Json = nlohmann::ordered_json;

inline constexpr const char* kUnitsConvention = "Gamma = 1, lambda = 1, hbar = c = 1; angles in degrees";

struct RunConfig {
  std::string command;
  Json document;                     // validated, with defaults filled in
  std::filesystem::path output_dir;  // RYDCHIRAL_OUTPUT_DIR overrides output.dir
  unsigned threads = 0;              // 0: hardware concurrency
  std::filesystem::path atoms;       // empty: bundled table
};

// Parse errors carry line and column, schema errors the field path.
RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

struct Artifact {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunReport {
  int exit_code = 0;
  std::vector<Artifact> artifacts;
  Json summary = Json::object();
  Json failures = Json::array();  // per-point sweep failures
};

// Executes the configured command and writes its outputs plus manifest.json.
RunReport run(const RunConfig& config);

// Exit status for an exception escaping run(): 2 config, 3 numerical, 4 resource.
int exit_code_for(const std::exception& e);

std::string sha256_hex(std::string_view data);
// Temp file in the target directory, then rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);
// %.12g, the CSV number format.
std::string format_number(double v);

ArrayGeometry geometry_from_json(const Json& j);
Json geometry_to_json(const ArrayGeometry& geom);

}  // namespace rydchiral
