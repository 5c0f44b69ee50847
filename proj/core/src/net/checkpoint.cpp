// Copyright 2026 The Endotool Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "endotool/net/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "endotool/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace endotool::net {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;  // no NUL

std::string shape_string(const std::vector<int>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  out += ")";
  return out;
}

std::int64_t shape_count(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

struct ParsedCheckpoint {
  ModelSpec spec;
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::size_t byte_offset;  // into `data`
  };
  std::vector<Entry> entries;
  std::vector<char> data;  // raw float32 payload
};

ParsedCheckpoint parse_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint file: " + path.string());
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) {
    throw IoError("failed reading checkpoint file: " + path.string());
  }

  if (bytes.size() < kMagicLen + 8 ||
      std::memcmp(bytes.data(), kCheckpointMagic, kMagicLen) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path.string());
  }
  std::uint64_t json_len = 0;
  std::memcpy(&json_len, bytes.data() + kMagicLen, 8);
  const std::size_t header_end = kMagicLen + 8;
  if (json_len > bytes.size() - header_end) {
    throw FormatError("checkpoint manifest overruns the file: " + path.string());
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(header_end),
                              bytes.begin() + static_cast<std::ptrdiff_t>(header_end + json_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") +
                      e.what());
  }

  ParsedCheckpoint parsed;
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw FormatError("unsupported checkpoint format_version " +
                        j.at("format_version").dump());
    }
    parsed.spec = model_spec_from_json(j.at("spec").dump());
    std::size_t offset = 0;
    for (const nlohmann::json& jt : j.at("tensors")) {
      ParsedCheckpoint::Entry e;
      e.name = jt.at("name").get<std::string>();
      e.shape = jt.at("shape").get<std::vector<int>>();
      if (jt.at("dtype").get<std::string>() != "float32") {
        throw FormatError("tensor " + e.name + " has unsupported dtype \"" +
                          jt.at("dtype").get<std::string>() + "\"");
      }
      e.byte_offset = offset;
      offset += static_cast<std::size_t>(shape_count(e.shape)) * 4;
      parsed.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is malformed: ") +
                      e.what());
  }

  const std::size_t data_start = header_end + json_len;
  const std::size_t payload = bytes.size() - data_start;
  std::size_t expected = 0;
  for (const auto& e : parsed.entries) {
    expected += static_cast<std::size_t>(shape_count(e.shape)) * 4;
  }
  if (payload != expected) {
    throw FormatError("checkpoint payload is " + std::to_string(payload) +
                      " bytes but the manifest implies " +
                      std::to_string(expected) + ": " + path.string());
  }
  parsed.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_start),
                     bytes.end());
  return parsed;
}

void copy_into_tensor(const ParsedCheckpoint& parsed,
                      const ParsedCheckpoint::Entry& entry, Tensor& dst) {
  const float* src =
      reinterpret_cast<const float*>(parsed.data.data() + entry.byte_offset);
  for (std::int64_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<double>(src[static_cast<std::size_t>(i)]);
  }
}

Model fill_model_from(const ParsedCheckpoint& parsed,
                      const std::filesystem::path& path) {
  Model model = Model::zeros(parsed.spec);
  std::vector<ParamRef> refs = model.parameters();
  std::vector<std::string> problems;
  if (refs.size() != parsed.entries.size()) {
    problems.push_back("expected " + std::to_string(refs.size()) +
                       " tensors, file has " +
                       std::to_string(parsed.entries.size()));
  }
  const std::size_t n = std::min(refs.size(), parsed.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (parsed.entries[i].name != refs[i].name) {
      problems.push_back("tensor " + std::to_string(i) + " is \"" +
                         parsed.entries[i].name + "\", expected \"" +
                         refs[i].name + "\"");
    } else if (parsed.entries[i].shape != refs[i].value->shape()) {
      problems.push_back(refs[i].name + ": file shape " +
                         shape_string(parsed.entries[i].shape) +
                         " vs expected " +
                         shape_string(refs[i].value->shape()));
    }
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint " + path.string() +
                      " disagrees with its own spec:";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw LoadError(msg);
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    copy_into_tensor(parsed, parsed.entries[i], *refs[i].value);
  }
  return model;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["spec"] = nlohmann::json::parse(model_spec_to_json(model.spec()));

  const auto values = model.parameter_values();
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, tensor] : values) {
    tensors.push_back({{"name", name},
                       {"shape", tensor->shape()},
                       {"dtype", "float32"}});
  }
  manifest["tensors"] = std::move(tensors);
  const std::string json_text = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open checkpoint file for writing: " + path.string());
  }
  out.write(kCheckpointMagic, static_cast<std::streamsize>(kMagicLen));
  const std::uint64_t json_len = json_text.size();
  out.write(reinterpret_cast<const char*>(&json_len), 8);
  out.write(json_text.data(), static_cast<std::streamsize>(json_text.size()));
  std::vector<float> buffer;
  for (const auto& [name, tensor] : values) {
    buffer.resize(static_cast<std::size_t>(tensor->size()));
    for (std::int64_t i = 0; i < tensor->size(); ++i) {
      buffer[static_cast<std::size_t>(i)] =
          static_cast<float>((*tensor)[i]);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * 4));
  }
  out.flush();
  if (!out.good()) {
    throw IoError("failed writing checkpoint file: " + path.string());
  }
}

Model load_checkpoint(const std::filesystem::path& path) {
  const ParsedCheckpoint parsed = parse_checkpoint_file(path);
  return fill_model_from(parsed, path);
}

Model load_checkpoint(const std::filesystem::path& path,
                      const ModelSpec& expected) {
  expected.validate();
  const ParsedCheckpoint parsed = parse_checkpoint_file(path);
  if (parsed.spec.variant != expected.variant) {
    throw ConfigError("checkpoint holds a " +
                      std::string(variant_name(parsed.spec.variant)) +
                      " but a " + std::string(variant_name(expected.variant)) +
                      " was requested: " + path.string());
  }
  const auto want = expected_parameter_shapes(expected);
  const auto have = expected_parameter_shapes(parsed.spec);
  std::vector<std::string> mismatched;
  const std::size_t n = std::min(want.size(), have.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (want[i].name != have[i].name || want[i].shape != have[i].shape) {
      mismatched.push_back(want[i].name + ": expected " +
                           shape_string(want[i].shape) + ", checkpoint has " +
                           have[i].name + " " + shape_string(have[i].shape));
    }
  }
  for (std::size_t i = n; i < want.size(); ++i) {
    mismatched.push_back(want[i].name + ": missing from checkpoint");
  }
  for (std::size_t i = n; i < have.size(); ++i) {
    mismatched.push_back(have[i].name + ": unexpected extra tensor");
  }
  if (!mismatched.empty()) {
    std::string msg = "checkpoint " + path.string() +
                      " does not match the requested model:";
    for (const std::string& m : mismatched) msg += "\n  " + m;
    throw LoadError(msg);
  }
  if (!(parsed.spec == expected)) {
    throw ConfigError("checkpoint spec differs from the requested spec "
                      "(same shapes, different configuration): " +
                      path.string());
  }
  return fill_model_from(parsed, path);
}

void load_backbone_weights(Model& model, const std::filesystem::path& path) {
  const ParsedCheckpoint parsed = parse_checkpoint_file(path);
  std::map<std::string, const ParsedCheckpoint::Entry*> by_name;
  for (const auto& e : parsed.entries) by_name[e.name] = &e;

  std::vector<ParamRef> refs = model.parameters();
  std::vector<std::string> problems;
  std::vector<std::pair<const ParsedCheckpoint::Entry*, Tensor*>> plan;
  for (const ParamRef& r : refs) {
    if (r.name.rfind("fc_tool.", 0) == 0 || r.name.rfind("fc_phase.", 0) == 0) {
      continue;  // heads are never taken from a weights file
    }
    auto it = by_name.find(r.name);
    if (it == by_name.end()) {
      problems.push_back(r.name + ": missing from weights file");
      continue;
    }
    if (it->second->shape != r.value->shape()) {
      problems.push_back(r.name + ": file shape " +
                         shape_string(it->second->shape) + " vs expected " +
                         shape_string(r.value->shape()));
      continue;
    }
    plan.emplace_back(it->second, r.value);
  }
  if (!problems.empty()) {
    std::string msg = "backbone weights " + path.string() +
                      " do not fit the model:";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw LoadError(msg);
  }
  for (auto& [entry, tensor] : plan) {
    copy_into_tensor(parsed, *entry, *tensor);
  }
}

}  // namespace endotool::net
