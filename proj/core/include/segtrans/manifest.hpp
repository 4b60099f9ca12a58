#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace segtrans {

// Reproducibility record emitted beside every run's outputs: the command,
// the resolved configuration, input/output paths with content hashes, the
// seed, and timestamps. Flat key=value text.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, int64_t value);
  void set(const std::string& key, uint64_t value);
  void set(const std::string& key, double value);
  void add_input(const std::string& path);
  void add_output(const std::string& path);

  // Hashes registered files (FNV-1a 64 over bytes) and writes the manifest.
  void write(const std::string& path) const;

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

uint64_t fnv1a_file(const std::string& path);

}  // namespace segtrans
