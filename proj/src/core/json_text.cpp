#include "blockforge/core/json_text.hpp"

#include <cmath>
#include <cstdio>

#include "blockforge/core/error.hpp"

namespace blockforge {

std::string format_real(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "non-finite real");
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::string quote(std::string_view text) { return nlohmann::json(std::string(text)).dump(); }

namespace {

void dump_into(const nlohmann::ordered_json &v, std::string &out) {
  switch (v.type()) {
  case nlohmann::ordered_json::value_t::object: {
    out += '{';
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) out += ',';
      first = false;
      out += quote(it.key());
      out += ':';
      dump_into(it.value(), out);
    }
    out += '}';
    break;
  }
  case nlohmann::ordered_json::value_t::array: {
    out += '[';
    bool first = true;
    for (const auto &e : v) {
      if (!first) out += ',';
      first = false;
      dump_into(e, out);
    }
    out += ']';
    break;
  }
  case nlohmann::ordered_json::value_t::number_float: out += format_real(v.get<double>()); break;
  default: out += v.dump(); break;
  }
}

} // namespace

std::string canonical_dump(const nlohmann::ordered_json &value) {
  std::string out;
  dump_into(value, out);
  return out;
}

} // namespace blockforge
