// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "scriptnet/errors.hpp"

namespace scriptnet::io {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'L', 'S'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t at) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return value;
}

}  // namespace

std::string serialize_checkpoint(const models::Model& model, const CheckpointMeta& meta) {
  const auto params = model.parameters();
  nlohmann::ordered_json header;
  header["kind"] = model.kind();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : model.config()) config[k] = v;
  header["config"] = config;
  auto& list = header["parameters"] = nlohmann::ordered_json::array();
  for (const auto& p : params) list.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  header["seed"] = meta.seed;
  header["threshold"] = meta.threshold;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta.metrics) metrics[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
  header["metrics"] = metrics;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& p : params) {
    for (Scalar v : p.tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

LoadedCheckpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IntegrityError("not a checkpoint: bad magic or truncated preamble");
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw Error("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) throw IntegrityError("checkpoint truncated inside its header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  LoadedCheckpoint out;
  std::string kind;
  ConfigMap config;
  std::vector<std::pair<std::string, ad::Shape>> declared;
  try {
    kind = header.at("kind").get<std::string>();
    for (const auto& [k, v] : header.at("config").items()) config[k] = v.get<std::string>();
    for (const auto& p : header.at("parameters")) {
      declared.emplace_back(p.at("name").get<std::string>(), p.at("shape").get<ad::Shape>());
    }
    out.meta.seed = header.at("seed").get<std::uint64_t>();
    out.meta.threshold = header.at("threshold").get<double>();
    for (const auto& [k, v] : header.at("metrics").items()) {
      out.meta.metrics[k] = v.is_null() ? std::nan("") : v.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header is incomplete: ") + e.what());
  }

  std::size_t payload = 0;
  for (const auto& [name, shape] : declared) payload += ad::shape_numel(shape) * 4;
  const std::size_t available = bytes.size() - 16 - header_len;
  if (available != payload) {
    throw IntegrityError("checkpoint payload holds " + std::to_string(available) + " bytes but the header declares " +
                         std::to_string(payload));
  }

  auto model = models::make_model(kind, config, 0);
  auto params = model->parameters();
  if (params.size() != declared.size()) {
    throw IntegrityError("checkpoint declares " + std::to_string(declared.size()) + " parameters but a '" + kind +
                         "' model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != declared[i].first) {
      throw IntegrityError("checkpoint parameter '" + declared[i].first + "' found where '" + params[i].name +
                           "' was expected");
    }
    if (params[i].tensor.shape() != declared[i].second) {
      throw IntegrityError("checkpoint parameter '" + declared[i].first + "' has shape " +
                           ad::shape_string(declared[i].second) + " but the model expects " +
                           ad::shape_string(params[i].tensor.shape()));
    }
  }
  std::size_t at = 16 + header_len;
  for (auto& p : params) {
    for (Scalar& v : p.tensor.mutable_data()) {
      v = static_cast<Scalar>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, at)));
      at += 4;
    }
  }
  model->parameters_updated();
  out.model = std::move(model);
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const models::Model& model, const CheckpointMeta& meta) {
  const std::string bytes = serialize_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace scriptnet::io
