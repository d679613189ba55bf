#include "skeladapt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace skeladapt {

namespace {

constexpr char kMagic[4] = {'S', 'K', 'A', 'D'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<uint32_t>(out, uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

std::string get_string(std::istream& in) {
  const uint32_t n = get<uint32_t>(in);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: absurd string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

void put_named_block(std::ostream& out, const std::vector<std::pair<std::string, std::vector<float>>>& block) {
  put<uint32_t>(out, uint32_t(block.size()));
  for (const auto& [name, data] : block) {
    put_string(out, name);
    put<uint64_t>(out, data.size());
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * sizeof(float)));
  }
}

std::vector<std::pair<std::string, std::vector<float>>> get_named_block(std::istream& in) {
  const uint32_t n = get<uint32_t>(in);
  std::vector<std::pair<std::string, std::vector<float>>> block(n);
  for (uint32_t i = 0; i < n; ++i) {
    block[i].first = get_string(in);
    const uint64_t len = get<uint64_t>(in);
    block[i].second.resize(len);
    in.read(reinterpret_cast<char*>(block[i].second.data()), std::streamsize(len * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor " + block[i].first);
  }
  return block;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put<uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in) {
  const uint64_t n = get<uint64_t>(in);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated optimizer state");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint64_t>(out, ck.net_hash);
  put<uint64_t>(out, ck.disc_hash);
  put<uint8_t>(out, ck.norm_kind);
  put<int64_t>(out, ck.iteration);
  put_named_block(out, ck.net_params);
  put_named_block(out, ck.net_state);
  put_named_block(out, ck.disc_params);
  put_doubles(out, ck.net_opt);
  put_doubles(out, ck.disc_opt);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  const uint32_t version = get<uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  Checkpoint ck;
  ck.net_hash = get<uint64_t>(in);
  ck.disc_hash = get<uint64_t>(in);
  ck.norm_kind = get<uint8_t>(in);
  ck.iteration = get<int64_t>(in);
  ck.net_params = get_named_block(in);
  ck.net_state = get_named_block(in);
  ck.disc_params = get_named_block(in);
  ck.net_opt = get_doubles(in);
  ck.disc_opt = get_doubles(in);
  return ck;
}

}  // namespace skeladapt
