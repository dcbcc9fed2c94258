#ifndef PRISM_EMBEDDING_CHECKPOINT_HPP
#define PRISM_EMBEDDING_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/embedding/layers.hpp"

namespace prism {

// Layout (little-endian):
//   "PRISMCKP" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 data[prod(dims)], row-major
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'P', 'R', 'I', 'S', 'M', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  Vec data;
  bool operator==(const NamedTensor&) const = default;
};

namespace detail {
template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("checkpoint " + path + ": truncated");
  return v;
}

inline std::uint64_t element_count(const Shape& s) {
  std::uint64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}
}  // namespace detail

inline void write_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put(out, kCheckpointVersion);
  detail::put(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::require(detail::element_count(t.shape) == t.data.size(), "checkpoint: tensor " + t.name + " shape/data mismatch");
    detail::put(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::put(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) detail::put(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<NamedTensor> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw ParseError("checkpoint " + path + ": bad magic");
  const auto version = detail::get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint " + path + ": unsupported version " + std::to_string(version));
  const auto count = detail::get<std::uint32_t>(in, path);
  std::vector<NamedTensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    const auto len = detail::get<std::uint32_t>(in, path);
    if (len > 4096) throw ParseError("checkpoint " + path + ": implausible name length");
    t.name.resize(len);
    if (!in.read(t.name.data(), len)) throw ParseError("checkpoint " + path + ": truncated");
    const auto rank = detail::get<std::uint32_t>(in, path);
    if (rank > 8) throw ParseError("checkpoint " + path + ": implausible rank for " + t.name);
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(detail::get<std::uint64_t>(in, path));
    const auto n = detail::element_count(t.shape);
    if (n > (std::uint64_t{1} << 32)) throw ParseError("checkpoint " + path + ": implausible size for " + t.name);
    t.data.resize(n);
    if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(n * sizeof(double))))
      throw ParseError("checkpoint " + path + ": truncated tensor " + t.name);
    out.push_back(std::move(t));
  }
  return out;
}

/// Collects a model's for_each_tensor (or for_each_param) view.
template <class M>
std::vector<NamedTensor> export_tensors(M& model, const std::string& prefix) {
  std::vector<NamedTensor> out;
  auto f = [&](const std::string& name, Vec& v, const Shape& s) { out.push_back({name, s, v}); };
  if constexpr (requires { model.for_each_tensor(prefix, f); })
    model.for_each_tensor(prefix, f);
  else
    model.for_each_param(prefix, f);
  return out;
}

/// Fills `model` from tensors by name; every model tensor must be present with a matching shape.
template <class M>
void import_tensors(M& model, const std::string& prefix, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  auto f = [&](const std::string& name, Vec& v, const Shape& s) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("checkpoint: missing tensor " + name);
    if (it->second->shape != s) throw ParseError("checkpoint: shape mismatch for " + name);
    v = it->second->data;
  };
  if constexpr (requires { model.for_each_tensor(prefix, f); })
    model.for_each_tensor(prefix, f);
  else
    model.for_each_param(prefix, f);
}

}  // namespace prism

#endif
