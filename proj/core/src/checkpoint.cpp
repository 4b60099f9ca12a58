#include "segtrans/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace segtrans {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'T', '1'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<uint64_t>(d));
}
void put_block(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}
void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_block(out, name);
  put_u32(out, static_cast<uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u64(out, static_cast<uint64_t>(d));
  for (double v : t.data) put_f64(out, v);
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string block() {
    const uint64_t len = u64();
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  Tensor tensor_body() {
    const uint32_t rank = u32();
    std::vector<int> shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(u64());
    Tensor t(std::move(shape));
    for (double& v : t.data) v = f64();
    return t;
  }
  std::string_view head(size_t n) {
    need(n);
    std::string_view v(bytes_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(uint64_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("truncated payload");
  }
  std::string bytes_;
  size_t pos_ = 0;
};

std::string meta_text(const Checkpoint& c) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "arch=" << c.arch << '\n'
     << "epoch=" << c.epoch << '\n'
     << "best_valid_cost=" << c.best_valid_cost << '\n'
     << "seed=" << c.seed << '\n';
  return ss.str();
}

void parse_meta(const std::string& text, Checkpoint& c) {
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint metadata: bad line");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "arch") c.arch = val;
    else if (key == "epoch") c.epoch = std::stoll(val);
    else if (key == "best_valid_cost") c.best_valid_cost = std::stod(val);
    else if (key == "seed") c.seed = std::stoull(val);
    // Unknown keys are ignored for forward compatibility.
  }
}

}  // namespace

Checkpoint Checkpoint::from_network(Network& net, uint64_t seed) {
  Checkpoint c;
  c.arch = net.arch();
  c.config = net.config();
  c.vocabulary = net.vocab();
  c.seed = seed;
  for (Parameter* p : net.parameters()) {
    c.param_names.push_back(p->name);
    c.params.push_back(p->value);
  }
  return c;
}

std::unique_ptr<Network> Checkpoint::restore() const {
  std::unique_ptr<Network> net = make_network(arch, config, vocabulary, /*seed=*/0);
  auto params = net->parameters();
  if (params.size() != this->params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != param_names[i])
      throw std::runtime_error("checkpoint: parameter name mismatch: expected " +
                               params[i]->name + ", found " + param_names[i]);
    if (params[i]->value.shape != this->params[i].shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + params[i]->name);
    params[i]->value = this->params[i];
  }
  return net;
}

void Checkpoint::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_block(out, meta_text(*this));
  put_block(out, config.to_text());
  put_block(out, vocabulary.to_text());

  put_u32(out, static_cast<uint32_t>(params.size()));
  for (size_t i = 0; i < params.size(); ++i) put_tensor(out, param_names[i], params[i]);

  put_u32(out, moments.has_value() ? 1 : 0);
  if (moments) {
    put_u64(out, static_cast<uint64_t>(moments->step));
    put_u32(out, static_cast<uint32_t>(moments->m.size()));
    for (size_t i = 0; i < moments->m.size(); ++i) {
      put_tensor(out, param_names[i] + ".m", moments->m[i]);
      put_tensor(out, param_names[i] + ".v", moments->v[i]);
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  Reader r(ss.str());

  if (std::string(r.head(4)) != std::string(kMagic, 4))
    throw std::runtime_error("not a checkpoint");
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint c;
  parse_meta(r.block(), c);
  c.config = ModelConfig::from_text(r.block());
  c.vocabulary = Vocabulary::from_text(r.block());

  const uint32_t n_params = r.u32();
  c.param_names.reserve(n_params);
  c.params.reserve(n_params);
  for (uint32_t i = 0; i < n_params; ++i) {
    c.param_names.push_back(r.block());
    c.params.push_back(r.tensor_body());
  }

  if (r.u32() != 0) {
    AdamMoments mo;
    mo.step = static_cast<int64_t>(r.u64());
    const uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
      r.block();  // name, redundant with param order
      mo.m.push_back(r.tensor_body());
      r.block();
      mo.v.push_back(r.tensor_body());
    }
    c.moments = std::move(mo);
  }
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return c;
}

}  // namespace segtrans
