#include "blockforge/layout/jsonl.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "blockforge/core/error.hpp"
#include "blockforge/core/json_text.hpp"

namespace blockforge {

namespace {

using nlohmann::json;

[[noreturn]] void fail(std::size_t line, const std::string &path, const std::string &what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + path + ": " + what);
}

Vec3 read_vec3(const json &v, std::size_t line, const std::string &path) {
  if (!v.is_array() || v.size() != 3) fail(line, path, "expected array of 3 numbers");
  Vec3 out;
  for (std::size_t k = 0; k < 3; ++k) {
    if (!v[k].is_number()) fail(line, path, "expected array of 3 numbers");
    out[k] = v[k].get<double>();
    if (!std::isfinite(out[k])) fail(line, path, "non-finite value");
  }
  return out;
}

std::string read_string(const json &obj, const char *key, std::size_t line, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) fail(line, key, "missing field");
    return {};
  }
  if (!it->is_string()) fail(line, key, "expected string");
  return it->get<std::string>();
}

} // namespace

std::string layout_to_json_line(const BoxLayout &layout) {
  std::string out = "{\"id\":" + quote(layout.id) + ",\"prompt\":" + quote(layout.prompt) +
                    ",\"style\":" + quote(layout.style) + ",\"boxes\":[";
  for (std::size_t i = 0; i < layout.boxes.size(); ++i) {
    const auto &b = layout.boxes[i];
    if (i) out += ',';
    out += "{\"category\":" + quote(CategoryTaxonomy::name_of(b.category)) + ",\"center\":[";
    for (int k = 0; k < 3; ++k) out += (k ? "," : "") + format_real(b.center[k]);
    out += "],\"size\":[";
    for (int k = 0; k < 3; ++k) out += (k ? "," : "") + format_real(b.size[k]);
    out += "]}";
  }
  out += "]}";
  return out;
}

BoxLayout layout_from_json_line(std::string_view line, std::size_t line_number) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error &e) {
    fail(line_number, "$", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(line_number, "$", "expected object");

  BoxLayout layout;
  layout.id = read_string(doc, "id", line_number, true);
  layout.prompt = read_string(doc, "prompt", line_number, false);
  layout.style = read_string(doc, "style", line_number, false);

  auto boxes = doc.find("boxes");
  if (boxes == doc.end()) fail(line_number, "boxes", "missing field");
  if (!boxes->is_array()) fail(line_number, "boxes", "expected array");
  for (std::size_t i = 0; i < boxes->size(); ++i) {
    const auto &jb = (*boxes)[i];
    const std::string base = "boxes[" + std::to_string(i) + "]";
    if (!jb.is_object()) fail(line_number, base, "expected object");
    ComponentBox b;
    auto cat = jb.find("category");
    if (cat == jb.end() || !cat->is_string()) fail(line_number, base + ".category", "expected string");
    auto index = CategoryTaxonomy::index_of(cat->get<std::string>());
    if (!index) {
      throw Error(ErrorCode::UnknownCategory, "line " + std::to_string(line_number) + ": " + base +
                                                  ".category: unknown category \"" +
                                                  cat->get<std::string>() + "\"");
    }
    b.category = *index;
    if (!jb.contains("center")) fail(line_number, base + ".center", "missing field");
    if (!jb.contains("size")) fail(line_number, base + ".size", "missing field");
    b.center = read_vec3(jb["center"], line_number, base + ".center");
    b.size = read_vec3(jb["size"], line_number, base + ".size");
    for (double s : b.size) {
      if (!(s > 0.0)) fail(line_number, base + ".size", "size components must be positive");
    }
    layout.boxes.push_back(b);
  }
  return layout;
}

std::vector<BoxLayout> parse_jsonl(std::string_view text) {
  std::vector<BoxLayout> out;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    ++line_number;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    out.push_back(layout_from_json_line(line, line_number));
  }
  return out;
}

std::string to_jsonl(const std::vector<BoxLayout> &layouts) {
  std::string out;
  for (const auto &l : layouts) {
    out += layout_to_json_line(l);
    out += '\n';
  }
  return out;
}

std::vector<BoxLayout> load_jsonl(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

void save_jsonl(const std::vector<BoxLayout> &layouts, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_jsonl(layouts);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

} // namespace blockforge
