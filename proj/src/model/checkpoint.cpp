/* Copyright 2026 The Polymass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cstring>
#include <filesystem>
#include <fstream>

#include "polymass/json_io.hpp"
#include "polymass/model.hpp"

namespace polymass {
namespace {

constexpr const char* kFormat = "polymass-params";
constexpr int kVersion = 1;

static_assert(sizeof(float) == 4, "float must be 32-bit");

bool HostIsLittleEndian() {
  const std::uint32_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

void WriteFloats(std::ofstream& out, const std::vector<float>& v) {
  if (HostIsLittleEndian()) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
    return;
  }
  for (float f : v) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    unsigned char bytes[4] = {static_cast<unsigned char>(u), static_cast<unsigned char>(u >> 8),
                              static_cast<unsigned char>(u >> 16),
                              static_cast<unsigned char>(u >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
}

void ReadFloats(std::ifstream& in, std::vector<float>& v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!HostIsLittleEndian()) {
    for (float& f : v) {
      unsigned char b[4];
      std::memcpy(b, &f, 4);
      std::uint32_t u = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
                        std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
      std::memcpy(&f, &u, 4);
    }
  }
}

}  // namespace

void WriteTensorBlob(const ModelParams<float>& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < params.count(); ++i) WriteFloats(out, params.tensor(i).data);
  if (!out) throw Error("write failed: " + path);
}

void ReadTensorBlob(ModelParams<float>& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("cannot open " + path);
  const auto size = static_cast<std::size_t>(in.tellg());
  const std::size_t expected = params.ParameterCount() * sizeof(float);
  if (size != expected) {
    throw Error(path + ": expected " + std::to_string(expected) + " bytes, found " +
                std::to_string(size));
  }
  in.seekg(0);
  for (std::size_t i = 0; i < params.count(); ++i) ReadFloats(in, params.tensor(i).data);
  if (!in) throw Error("read failed: " + path);
}

void SaveParams(const ModelParams<float>& params, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& t = params.tensor(i);
    tensors.push_back({{"name", params.name(i)}, {"shape", {t.rows, t.cols}}, {"offset", offset}});
    offset += t.data.size();
  }
  nlohmann::json manifest = {{"format", kFormat},
                             {"version", kVersion},
                             {"dtype", "f32le"},
                             {"config", ToJson(params.config())},
                             {"tensors", tensors}};
  WriteFile(dir + "/manifest.json", manifest.dump(2) + "\n");
  WriteTensorBlob(params, dir + "/params.bin");
}

ModelParams<float> LoadParams(const std::string& dir, const ModelConfig* expected) {
  const std::string mpath = dir + "/manifest.json";
  const nlohmann::json manifest = ParseJsonFile(mpath);
  if (manifest.value("format", "") != kFormat) throw Error(mpath + ": not a parameter manifest");
  const int version = manifest.value("version", -1);
  if (version != kVersion) {
    throw Error(mpath + ": format version " + std::to_string(version) + ", this build reads " +
                std::to_string(kVersion));
  }
  const ModelConfig config = ModelConfigFromJson(manifest.at("config"));
  config.Validate();
  ModelParams<float> params(config);
  const ModelParams<float>* reference = nullptr;
  ModelParams<float> expected_params;
  if (expected != nullptr) {
    expected_params = ModelParams<float>(*expected);
    reference = &expected_params;
  }
  const auto& tensors = manifest.at("tensors");
  for (const auto& entry : tensors) {
    const std::string name = entry.at("name").get<std::string>();
    const std::size_t rows = entry.at("shape").at(0).get<std::size_t>();
    const std::size_t cols = entry.at("shape").at(1).get<std::size_t>();
    if (!params.contains(name)) throw Error(mpath + ": unexpected tensor " + name);
    const auto& have = params.at(name);
    if (have.rows != rows || have.cols != cols) {
      throw Error(mpath + ": tensor " + name + " has shape [" + std::to_string(rows) + "," +
                  std::to_string(cols) + "], config implies [" + std::to_string(have.rows) + "," +
                  std::to_string(have.cols) + "]");
    }
    if (reference != nullptr) {
      if (!reference->contains(name)) throw Error(mpath + ": tensor " + name + " not in model");
      const auto& want = reference->at(name);
      if (want.rows != rows || want.cols != cols) {
        throw Error(mpath + ": tensor " + name + " has shape [" + std::to_string(rows) + "," +
                    std::to_string(cols) + "], model expects [" + std::to_string(want.rows) +
                    "," + std::to_string(want.cols) + "]");
      }
    }
  }
  if (tensors.size() != params.count()) {
    throw Error(mpath + ": " + std::to_string(tensors.size()) + " tensors listed, config implies " +
                std::to_string(params.count()));
  }
  if (reference != nullptr && reference->count() != params.count()) {
    throw Error(mpath + ": tensor count differs from the expected model");
  }
  ReadTensorBlob(params, dir + "/params.bin");
  return params;
}

}  // namespace polymass
