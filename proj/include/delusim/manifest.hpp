#pragma once

#include <map>
#include <string>
#include <vector>

namespace delusim::pipeline {

struct StageRecord {
  std::string status;  // "ok" or "failed"
  std::string input_hash;  // config + dependency outputs; drives cache hits
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  std::vector<std::string> warnings;
  double duration_s = 0.0;
  bool cache_hit = false;
};

// Append-only run manifest at <run_dir>/manifest.json. Every emitted artifact
// is listed with its content hash.
class Manifest {
 public:
  explicit Manifest(std::string run_dir);

  void set_config_snapshot(const std::string& snapshot_json);
  bool stage_ok(const std::string& stage) const;
  const StageRecord* stage(const std::string& stage) const;
  void record_stage(const std::string& stage, StageRecord record);
  void save() const;

  const std::string& run_dir() const { return run_dir_; }
  std::string hash_output_file(const std::string& relative_path) const;

 private:
  void load();
  std::string run_dir_;
  std::string config_snapshot_;
  std::map<std::string, StageRecord> stages_;
};

}  // namespace delusim::pipeline
