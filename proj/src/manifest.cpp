#include "delusim/manifest.hpp"

#include <filesystem>

#include "delusim/common.hpp"
#include "json.hpp"

namespace delusim::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

Manifest::Manifest(std::string run_dir) : run_dir_(std::move(run_dir)) {
  fs::create_directories(run_dir_);
  load();
}

void Manifest::load() {
  fs::path path = fs::path(run_dir_) / "manifest.json";
  if (!fs::exists(path)) return;
  json j = json::parse(read_file(path.string()));
  config_snapshot_ = j.value("config_snapshot", "");
  const json stages = j.value("stages", json::object());
  for (const auto& [name, sj] : stages.items()) {
    StageRecord rec;
    rec.status = sj.value("status", "failed");
    rec.input_hash = sj.value("input_hash", "");
    rec.duration_s = sj.value("duration_s", 0.0);
    rec.cache_hit = sj.value("cache_hit", false);
    const json outputs = sj.value("outputs", json::object());
    for (const auto& [file, hash] : outputs.items()) rec.outputs[file] = hash.get<std::string>();
    const json warnings = sj.value("warnings", json::array());
    for (const auto& w : warnings) rec.warnings.push_back(w.get<std::string>());
    stages_[name] = std::move(rec);
  }
}

void Manifest::set_config_snapshot(const std::string& snapshot_json) {
  config_snapshot_ = snapshot_json;
}

bool Manifest::stage_ok(const std::string& stage) const {
  auto it = stages_.find(stage);
  return it != stages_.end() && it->second.status == "ok";
}

const StageRecord* Manifest::stage(const std::string& stage) const {
  auto it = stages_.find(stage);
  return it == stages_.end() ? nullptr : &it->second;
}

void Manifest::record_stage(const std::string& stage, StageRecord record) {
  stages_[stage] = std::move(record);
  save();
}

void Manifest::save() const {
  json stages = json::object();
  for (const auto& [name, rec] : stages_) {
    json outputs = json::object();
    for (const auto& [file, hash] : rec.outputs) outputs[file] = hash;
    stages[name] = {{"status", rec.status},
                    {"input_hash", rec.input_hash},
                    {"outputs", outputs},
                    {"warnings", rec.warnings},
                    {"duration_s", rec.duration_s},
                    {"cache_hit", rec.cache_hit}};
  }
  json j = {{"tool_version", "delusim 0.1.0"},
            {"config_snapshot", config_snapshot_},
            {"stages", stages}};
  write_file_atomic((fs::path(run_dir_) / "manifest.json").string(), j.dump(2));
}

std::string Manifest::hash_output_file(const std::string& relative_path) const {
  return sha256_hex(read_file((fs::path(run_dir_) / relative_path).string()));
}

}  // namespace delusim::pipeline
