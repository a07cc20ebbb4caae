#include "ultraheat/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ultraheat/error.hpp"

namespace ultraheat {

namespace {

using Index = Eigen::Index;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> parse_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    rows.push_back(split_row(line));
  }
  return rows;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

double number(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  if (!parse_number(s, v)) {
    throw Error(ErrorCode::ParseError, "expected a number at row " + std::to_string(row + 1) +
                                           ", column " + std::to_string(col + 1) + ": '" + s + "'");
  }
  return v;
}

double json_number(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw Error(ErrorCode::ParseError, std::string("missing numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

SpaceSpec space_spec_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "space spec must be a JSON object");
  SpaceSpec s;
  s.radius = json_number(j, "radius");
  if (j.contains("children")) {
    if (!j["children"].is_array()) throw Error(ErrorCode::ParseError, "'children' must be an array");
    for (const auto& c : j["children"]) s.children.push_back(space_spec_from_json(c));
  }
  if (j.contains("leaves")) {
    if (!j["leaves"].is_array()) throw Error(ErrorCode::ParseError, "'leaves' must be an array");
    for (const auto& l : j["leaves"]) {
      LeafSpec leaf;
      if (l.is_string()) {
        leaf.id = l.get<std::string>();
      } else if (l.is_object() && l.contains("id")) {
        leaf.id = l["id"].is_string() ? l["id"].get<std::string>() : l["id"].dump();
        if (l.contains("mass")) leaf.mass = json_number(l, "mass");
      } else {
        throw Error(ErrorCode::ParseError, "leaf must be {\"id\": ..., \"mass\": ...}");
      }
      s.leaves.push_back(std::move(leaf));
    }
  }
  return s;
}

Json to_json(const SpaceSpec& spec) {
  Json j{{"radius", spec.radius}};
  if (!spec.children.empty()) {
    Json c = Json::array();
    for (const auto& ch : spec.children) c.push_back(to_json(ch));
    j["children"] = c;
  }
  if (!spec.leaves.empty()) {
    Json l = Json::array();
    for (const auto& leaf : spec.leaves) l.push_back(Json{{"id", leaf.id}, {"mass", leaf.mass}});
    j["leaves"] = l;
  }
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << text;
}

UltrametricSpace load_space(const std::filesystem::path& path) {
  return build_tree(space_spec_from_json(read_json_file(path)));
}

void save_space(const std::filesystem::path& path, const UltrametricSpace& space) {
  write_text_file(path, to_json(to_spec(space)).dump(2) + "\n");
}

LabeledMatrix parse_matrix_csv(const std::string& text) {
  const auto rows = parse_rows(text);
  if (rows.empty()) throw Error(ErrorCode::ParseError, "matrix CSV is empty");
  LabeledMatrix m;
  m.ids = rows[0];
  // A leading empty header cell marks an id column.
  const bool header_corner = !m.ids.empty() && m.ids[0].empty();
  if (header_corner) m.ids.erase(m.ids.begin());
  const std::size_t n = m.ids.size();
  if (rows.size() != n + 1) {
    throw Error(ErrorCode::InvalidMatrix, "expected " + std::to_string(n) + " data rows, got " +
                                              std::to_string(rows.size() - 1));
  }
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) {
    if (!pos.emplace(m.ids[i], i).second) {
      throw Error(ErrorCode::ParseError, "duplicate id '" + m.ids[i] + "'");
    }
  }
  m.values = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
  std::vector<bool> seen(n, false);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::size_t target = r - 1;
    std::size_t offset = 0;
    if (row.size() == n + 1) {
      const auto it = pos.find(row[0]);
      if (it == pos.end()) throw Error(ErrorCode::UnknownPoint, "row id '" + row[0] + "' not in header");
      target = it->second;
      offset = 1;
    } else if (row.size() != n) {
      throw Error(ErrorCode::InvalidMatrix, "row " + std::to_string(r + 1) + " has " +
                                                std::to_string(row.size()) + " cells, expected " +
                                                std::to_string(n));
    }
    if (seen[target]) throw Error(ErrorCode::ParseError, "row for '" + m.ids[target] + "' repeated");
    seen[target] = true;
    for (std::size_t c = 0; c < n; ++c) {
      m.values(static_cast<Index>(target), static_cast<Index>(c)) = number(row[c + offset], r, c + offset);
    }
  }
  return m;
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_text(path));
}

UltrametricSpace load_distance_csv(const std::filesystem::path& path,
                                   const std::vector<double>& masses) {
  LabeledMatrix m = read_matrix_csv(path);
  std::vector<double> mu = masses;
  if (mu.empty()) mu.assign(m.ids.size(), 1.0);
  return from_distance_matrix(m.values, mu, m.ids);
}

JumpKernel load_kernel_csv(SpacePtr space, const std::filesystem::path& path) {
  const LabeledMatrix m = read_matrix_csv(path);
  const std::size_t n = space->size();
  if (m.ids.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "kernel CSV has " + std::to_string(m.ids.size()) +
                                                  " ids, space has " + std::to_string(n));
  }
  std::vector<std::size_t> map(n);
  for (std::size_t i = 0; i < n; ++i) map[i] = space->index_of(m.ids[i]);
  Matrix w = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w(static_cast<Index>(map[i]), static_cast<Index>(map[j])) =
          m.values(static_cast<Index>(i), static_cast<Index>(j));
    }
  }
  return from_matrix(std::move(space), w);
}

JumpKernel kernel_from_json(SpacePtr space, const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorCode::ParseError, "kernel spec needs a string field 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "power") {
    PowerProfile prof;
    prof.exponent = json_number(j, "exponent");
    prof.scale = j.contains("scale") ? json_number(j, "scale") : 1.0;
    Scaling scaling = Scaling::None;
    if (j.contains("scaling")) {
      const std::string s = j["scaling"].get<std::string>();
      if (s == "mass") scaling = Scaling::Mass;
      else if (s != "none") throw Error(ErrorCode::ParseError, "scaling must be 'none' or 'mass'");
    }
    return isotropic_kernel(std::move(space), prof, scaling);
  }
  if (kind == "matrix") {
    if (j.contains("file")) {
      std::filesystem::path p = j["file"].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      return load_kernel_csv(std::move(space), p);
    }
    if (!j.contains("weights") || !j["weights"].is_array()) {
      throw Error(ErrorCode::ParseError, "matrix kernel needs 'weights' or 'file'");
    }
    const auto& rows = j["weights"];
    const auto n = static_cast<Index>(rows.size());
    Matrix w(n, n);
    for (Index i = 0; i < n; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Index>(row.size()) != n) {
        throw Error(ErrorCode::InvalidMatrix, "weights must be a square array of arrays");
      }
      for (Index k = 0; k < n; ++k) w(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    if (static_cast<std::size_t>(n) != space->size()) {
      throw Error(ErrorCode::DimensionMismatch, "weights size does not match the space");
    }
    return from_matrix(std::move(space), w);
  }
  throw Error(ErrorCode::ParseError, "unknown kernel kind '" + kind + "'");
}

Vector parse_function_csv(const UltrametricSpace& space, const std::string& text) {
  auto rows = parse_rows(text);
  double dummy = 0.0;
  if (!rows.empty() && rows[0].size() == 2 && !parse_number(rows[0][1], dummy)) {
    rows.erase(rows.begin());
  }
  Vector f = Vector::Zero(static_cast<Index>(space.size()));
  std::vector<bool> seen(space.size(), false);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw Error(ErrorCode::ParseError, "function rows must be 'id,value'");
    const std::size_t x = space.index_of(rows[r][0]);
    if (seen[x]) throw Error(ErrorCode::ParseError, "value for '" + rows[r][0] + "' repeated");
    seen[x] = true;
    f[static_cast<Index>(x)] = number(rows[r][1], r, 1);
  }
  for (std::size_t x = 0; x < space.size(); ++x) {
    if (!seen[x]) throw Error(ErrorCode::DimensionMismatch, "no value for '" + space.id(x) + "'");
  }
  return f;
}

Vector read_function_csv(const UltrametricSpace& space, const std::filesystem::path& path) {
  return parse_function_csv(space, read_text(path));
}

std::string function_csv(const UltrametricSpace& space, const Vector& f) {
  std::string out = "id,value\n";
  for (std::size_t x = 0; x < space.size(); ++x) {
    out += space.id(x) + "," + format_double(f[static_cast<Index>(x)]) + "\n";
  }
  return out;
}

std::string heat_kernel_csv(const UltrametricSpace& space, const HeatKernelTable& table) {
  std::string out = "t,x,y,value\n";
  for (std::size_t i = 0; i < table.times.size(); ++i) {
    const std::string t = format_double(table.times[i]);
    const Matrix& p = table.densities[i];
    for (std::size_t x = 0; x < space.size(); ++x) {
      for (std::size_t y = 0; y < space.size(); ++y) {
        out += t + "," + space.id(x) + "," + space.id(y) + "," +
               format_double(p(static_cast<Index>(x), static_cast<Index>(y))) + "\n";
      }
    }
  }
  return out;
}

}  // namespace ultraheat
