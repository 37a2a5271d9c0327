#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "blockforge/layout/box.hpp"

namespace blockforge {

/// One canonical record: {"id","prompt","style","boxes":[{"category","center","size"}]}.
std::string layout_to_json_line(const BoxLayout &layout);

/// Parses one record. `line_number` is only used for error messages; errors
/// name the offending field path (e.g. "boxes[0].size").
BoxLayout layout_from_json_line(std::string_view line, std::size_t line_number = 1);

std::vector<BoxLayout> parse_jsonl(std::string_view text);
std::string to_jsonl(const std::vector<BoxLayout> &layouts);

std::vector<BoxLayout> load_jsonl(const std::filesystem::path &path);
void save_jsonl(const std::vector<BoxLayout> &layouts, const std::filesystem::path &path);

} // namespace blockforge
