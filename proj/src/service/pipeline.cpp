#include "blockforge/service/pipeline.hpp"

#include <cstdio>

namespace blockforge {

ExpandResult expand_layout(const BoxLayout &layout, const std::string &prompt, StyleOracle &oracle,
                           double world_scale) {
  const std::string p = prompt.empty() ? layout.prompt : prompt;
  RuleLayout rules = infer_attachments(expand_to_rules(layout, default_templates(), world_scale));
  if (rules.meta.style.empty()) rules.meta.style = offline_style_keyword(p);
  auto resolved = resolve_styles(rules, p, oracle);
  return {std::move(resolved.rules), std::move(resolved.warnings)};
}

BuildResult build_rules(const RuleLayout &rules, std::optional<double> align_tolerance) {
  BuildResult out;
  out.scene = assemble(rules);
  if (align_tolerance) out.scene = align_siblings(out.scene, *align_tolerance);
  out.obj = export_obj(out.scene);
  out.manifest = scene_manifest(out.scene);
  out.warnings = out.scene.warnings;
  out.digest = fnv1a_hex(out.obj);
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i < bytes.size()) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

} // namespace blockforge
