#include "segtrans/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace segtrans {

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash file: " + path);
  uint64_t h = 0xCBF29CE484222325ull;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

void RunManifest::set(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void RunManifest::set(const std::string& key, int64_t value) {
  entries_.emplace_back(key, std::to_string(value));
}
void RunManifest::set(const std::string& key, uint64_t value) {
  entries_.emplace_back(key, std::to_string(value));
}
void RunManifest::set(const std::string& key, double value) {
  std::ostringstream ss;
  ss.precision(17);
  ss << value;
  entries_.emplace_back(key, ss.str());
}
void RunManifest::add_input(const std::string& path) { inputs_.push_back(path); }
void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "command=" << command_ << '\n';
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
  out << "timestamp_unix=" << secs.count() << '\n';
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  auto hash_line = [&](const std::string& prefix, const std::string& p, size_t i) {
    out << prefix << i << "_path=" << p << '\n';
    try {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(fnv1a_file(p)));
      out << prefix << i << "_fnv1a=" << buf << '\n';
    } catch (const std::exception&) {
      out << prefix << i << "_fnv1a=unavailable\n";
    }
  };
  for (size_t i = 0; i < inputs_.size(); ++i) hash_line("input", inputs_[i], i);
  for (size_t i = 0; i < outputs_.size(); ++i) hash_line("output", outputs_[i], i);
}

}  // namespace segtrans
