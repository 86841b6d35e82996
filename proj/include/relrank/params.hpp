#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relrank/tape.hpp"
#include "relrank/tensor.hpp"

namespace relrank {

class Bindings;

/// Ordered collection of named tensors. Insertion order is preserved and is
/// the order used for checkpoints and optimizer state.
class ParamSet {
 public:
  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<std::string> names() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Zero tensors with the same names and shapes.
  ParamSet zeros_like() const;
  // Registers every entry as a variable leaf on `tape`.
  Bindings bind(Tape& tape) const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Parameter name -> tape variable for one forward pass.
class Bindings {
 public:
  void set(const std::string& name, Var v) { vars_[name] = v; }
  Var operator[](std::string_view name) const;
  bool contains(std::string_view name) const { return vars_.find(std::string(name)) != vars_.end(); }

  // Gradients of every bound parameter, named and ordered like `like`.
  ParamSet gradients(const Gradients& grads, const ParamSet& like) const;

 private:
  std::map<std::string, Var, std::less<>> vars_;
};

// Checkpoint file: magic "RRCKPT01", u32 entry count, then per entry
// (u32 name length, name bytes, u32 rank, u64 dims...), followed by every
// entry's row-major float64 payload in the same order. All integers and
// floats are little-endian.
void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace relrank
