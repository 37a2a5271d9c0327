#include "blockforge/diffusion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "blockforge/core/error.hpp"
#include "blockforge/core/json_text.hpp"

namespace blockforge {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T> void put(std::string &out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T> T get(const std::string &in, std::size_t &pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorCode::ParseError, "checkpoint truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

} // namespace

std::string checkpoint_bytes(const DenoiserModel &model, const TrainConfig &config) {
  nlohmann::ordered_json header;
  header["config"] = config.to_json();
  header["tensors"] = nlohmann::ordered_json::array();
  std::string data;
  for (const auto &[name, m] : model.parameters()) {
    nlohmann::ordered_json t;
    t["name"] = name;
    t["shape"] = {m.rows(), m.cols()};
    t["offset"] = data.size();
    for (Eigen::Index i = 0; i < m.size(); ++i) put(data, static_cast<float>(m.data()[i]));
    t["len"] = static_cast<std::size_t>(m.size()) * sizeof(float);
    header["tensors"].push_back(std::move(t));
  }
  const std::string header_text = canonical_dump(header);
  std::string out = "BFCK";
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  out += data;
  return out;
}

void save_checkpoint(const std::filesystem::path &path, const DenoiserModel &model,
                     const TrainConfig &config) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << checkpoint_bytes(model, config);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

LoadedCheckpoint checkpoint_from_bytes(const std::string &bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "BFCK") != 0) {
    throw Error(ErrorCode::ParseError, "not a BFCK checkpoint");
  }
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::ParseError, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get<std::uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw Error(ErrorCode::ParseError, "checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint header: ") + e.what());
  }
  const std::size_t data_start = pos + header_len;

  LoadedCheckpoint out;
  out.config = TrainConfig::from_json(header.at("config"));
  out.model = DenoiserModel(out.config.denoiser(), 0);
  auto &params = out.model.parameters();
  std::size_t seen = 0;
  for (const auto &t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::ParseError, "unexpected tensor " + name);
    const auto rows = t.at("shape").at(0).get<Eigen::Index>();
    const auto cols = t.at("shape").at(1).get<Eigen::Index>();
    if (rows != it->second.rows() || cols != it->second.cols()) {
      throw Error(ErrorCode::ParseError, "shape mismatch for tensor " + name);
    }
    std::size_t offset = data_start + t.at("offset").get<std::size_t>();
    const auto len = t.at("len").get<std::size_t>();
    if (len != static_cast<std::size_t>(rows * cols) * sizeof(float) || offset + len > bytes.size()) {
      throw Error(ErrorCode::ParseError, "bad extent for tensor " + name);
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i) it->second.data()[i] = get<float>(bytes, offset);
    ++seen;
  }
  if (seen != params.size()) throw Error(ErrorCode::ParseError, "checkpoint is missing tensors");
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_bytes(ss.str());
}

} // namespace blockforge
