#include "relrank/params.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "relrank/error.hpp"

namespace relrank {

namespace {

constexpr char kMagic[8] = {'R', 'R', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw DataError("checkpoint truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return value;
}

}  // namespace

void ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(value));
}

std::size_t ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].first == name) return i;
  return entries_.size();
}

bool ParamSet::contains(std::string_view name) const { return index_of(name) < entries_.size(); }

const Tensor& ParamSet::get(std::string_view name) const {
  const std::size_t i = index_of(name);
  if (i == entries_.size()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return entries_[i].second;
}

Tensor& ParamSet::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParamSet&>(*this).get(name));
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& [name, t] : entries_) out.add(name, Tensor(t.shape()));
  return out;
}

Bindings ParamSet::bind(Tape& tape) const {
  Bindings b;
  for (const auto& [name, t] : entries_) b.set(name, tape.variable(t));
  return b;
}

Var Bindings::operator[](std::string_view name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("parameter '" + std::string(name) + "' is not bound");
  return it->second;
}

ParamSet Bindings::gradients(const Gradients& grads, const ParamSet& like) const {
  ParamSet out;
  for (const auto& [name, t] : like) {
    out.add(name, contains(name) ? grads.of((*this)[name]) : Tensor(t.shape()));
  }
  return out;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_le<std::uint64_t>(os, d);
  }
  for (const auto& [_, t] : params)
    for (double v : t.data()) write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw DataError("failed writing checkpoint: " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  const auto count = read_le<std::uint32_t>(is);
  std::vector<std::pair<std::string, Shape>> header;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = read_le<std::uint32_t>(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw DataError("checkpoint truncated");
    const auto rank = read_le<std::uint32_t>(is);
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(read_le<std::uint64_t>(is));
    header.emplace_back(std::move(name), std::move(shape));
  }
  ParamSet out;
  for (auto& [name, shape] : header) {
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = std::bit_cast<double>(read_le<std::uint64_t>(is));
    out.add(name, Tensor(shape, std::move(data)));
  }
  return out;
}

}  // namespace relrank
