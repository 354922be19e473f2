#include "eon/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace eon {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const std::string& dir, const ParamStore& store,
                     const json& meta, const std::string& dtype) {
  if (dtype != "f32" && dtype != "f64")
    throw CheckpointError("unsupported checkpoint dtype '" + dtype + "'");
  fs::create_directories(dir);

  json manifest = meta;
  manifest["format_version"] = 1;
  json index = json::object();

  std::ofstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot write params.bin in " + dir);
  int64_t offset = 0;
  for (int i = 0; i < store.size(); ++i) {
    const ParamStore::Entry& e = store.entry(i);
    index[e.name] = {{"shape", e.value.shape},
                     {"offset", offset},
                     {"dtype", dtype}};
    if (dtype == "f32") {
      for (double x : e.value.v) {
        const float f = static_cast<float>(x);
        bin.write(reinterpret_cast<const char*>(&f), sizeof(float));
      }
      offset += e.value.numel() * static_cast<int64_t>(sizeof(float));
    } else {
      bin.write(reinterpret_cast<const char*>(e.value.v.data()),
                e.value.numel() * static_cast<int64_t>(sizeof(double)));
      offset += e.value.numel() * static_cast<int64_t>(sizeof(double));
    }
  }
  if (!bin) throw CheckpointError("failed writing params.bin in " + dir);
  bin.close();

  manifest["params"] = std::move(index);
  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw CheckpointError("cannot write manifest.json in " + dir);
  mf << manifest.dump(2);
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf)
    throw CheckpointError("cannot open checkpoint manifest in '" + dir + "'");
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::parse_error& e) {
    throw CheckpointError("malformed checkpoint manifest: " +
                          std::string(e.what()));
  }
  if (!manifest.contains("params"))
    throw CheckpointError("checkpoint manifest has no parameter index");

  std::ifstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot open params.bin in '" + dir + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(bin)),
                        std::istreambuf_iterator<char>());

  LoadedCheckpoint out;
  // json objects iterate in key order; rebuild entries sorted by offset so
  // the store order matches the original registration order.
  std::vector<std::pair<int64_t, std::string>> ordered;
  for (auto it = manifest["params"].begin(); it != manifest["params"].end();
       ++it)
    ordered.emplace_back(it.value().at("offset").get<int64_t>(), it.key());
  std::sort(ordered.begin(), ordered.end());

  for (const auto& [offset, name] : ordered) {
    const json& entry = manifest["params"][name];
    const std::vector<int64_t> shape =
        entry.at("shape").get<std::vector<int64_t>>();
    const std::string dtype = entry.at("dtype").get<std::string>();
    Tensor t = Tensor::zeros(shape);
    const size_t elem = dtype == "f32" ? sizeof(float) : sizeof(double);
    if (dtype != "f32" && dtype != "f64")
      throw CheckpointError("unknown dtype '" + dtype + "' for '" + name + "'");
    const size_t need = offset + t.numel() * elem;
    if (need > raw.size())
      throw CheckpointError("params.bin truncated at entry '" + name + "'");
    if (dtype == "f32") {
      for (int64_t i = 0; i < t.numel(); ++i) {
        float f;
        std::memcpy(&f, raw.data() + offset + i * sizeof(float), sizeof(float));
        t.v[i] = static_cast<double>(f);
      }
    } else {
      std::memcpy(t.v.data(), raw.data() + offset, t.numel() * sizeof(double));
    }
    out.params.add(name, std::move(t));
  }
  manifest.erase("params");
  out.meta = std::move(manifest);
  return out;
}

}  // namespace eon
