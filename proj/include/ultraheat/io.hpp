#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ultraheat/kernel.hpp"
#include "ultraheat/report.hpp"
#include "ultraheat/semigroup.hpp"

namespace ultraheat {

/// {"radius": R, "children": [...], "leaves": [{"id": s, "mass": m}, ...]}
SpaceSpec space_spec_from_json(const Json& j);
Json to_json(const SpaceSpec& spec);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

UltrametricSpace load_space(const std::filesystem::path& path);
void save_space(const std::filesystem::path& path, const UltrametricSpace& space);

/// Square CSV with a header row of ids. Each data row may start with its id;
/// rows are then matched by id, otherwise taken in header order.
struct LabeledMatrix {
  std::vector<std::string> ids;
  Matrix values;
};
LabeledMatrix parse_matrix_csv(const std::string& text);
LabeledMatrix read_matrix_csv(const std::filesystem::path& path);

/// Distance matrix CSV; masses default to 1.
UltrametricSpace load_distance_csv(const std::filesystem::path& path,
                                   const std::vector<double>& masses = {});

/// Weight matrix CSV whose ids are matched against the space.
JumpKernel load_kernel_csv(SpacePtr space, const std::filesystem::path& path);

/// {"kind": "power", "exponent": s, "scale": c, "scaling": "none" | "mass"}
/// {"kind": "matrix", "weights": [[...], ...]} or {"kind": "matrix", "file": "w.csv"}
/// Relative file names resolve against `base_dir`.
JumpKernel kernel_from_json(SpacePtr space, const Json& j,
                            const std::filesystem::path& base_dir = {});

/// "id,value" rows (header optional), matched against the space ids.
Vector parse_function_csv(const UltrametricSpace& space, const std::string& text);
Vector read_function_csv(const UltrametricSpace& space, const std::filesystem::path& path);
std::string function_csv(const UltrametricSpace& space, const Vector& f);

/// "t,x,y,value" with one row per ordered pair and time.
std::string heat_kernel_csv(const UltrametricSpace& space, const HeatKernelTable& table);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace ultraheat
