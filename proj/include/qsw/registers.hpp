#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsw/errors.hpp"

namespace qsw {

using Index = std::int64_t;

struct Register {
  std::string name;
  Index dim = 1;

  friend bool operator==(const Register& a, const Register& b) {
    return a.name == b.name && a.dim == b.dim;
  }
};

// An ordered list of named registers. The order is canonical: basis index 0
// of the composite space corresponds to all registers in state |0>, and
// register 0 is the most significant factor (Kronecker order). Dimension-1
// registers are legal and encode absent systems.
class RegisterSystem {
 public:
  RegisterSystem() = default;
  explicit RegisterSystem(std::vector<Register> regs);

  static RegisterSystem single(const std::string& name, Index dim) {
    return RegisterSystem({{name, dim}});
  }

  Index total_dim() const { return total_dim_; }
  Index size() const { return static_cast<Index>(regs_.size()); }
  const std::vector<Register>& registers() const { return regs_; }
  const Register& at(Index i) const { return regs_[static_cast<size_t>(i)]; }

  bool has(const std::string& name) const;
  Index position(const std::string& name) const;  // throws NameClash if absent
  Index dim_of(const std::string& name) const;

  // Product of dims over a name subset.
  Index dim_of(const std::vector<std::string>& names) const;

  std::vector<std::string> names() const;

  // Concatenation; throws NameClash on duplicates.
  RegisterSystem concat(const RegisterSystem& other) const;

  // Subsystem in this system's order restricted to `names` (set semantics).
  RegisterSystem subsystem(const std::vector<std::string>& names) const;

  // Decompose a flat basis index into per-register digits and back.
  void digits_of(Index flat, std::vector<Index>& out) const;
  Index flat_of(const std::vector<Index>& digits) const;

  // Stride of register i: product of dims of all registers after i.
  Index stride(Index i) const { return strides_[static_cast<size_t>(i)]; }

  friend bool operator==(const RegisterSystem& a, const RegisterSystem& b) {
    return a.regs_ == b.regs_;
  }

 private:
  std::vector<Register> regs_;
  std::vector<Index> strides_;
  Index total_dim_ = 1;
};

// Index remapping for register reordering. `order` lists positions in the
// source system; the returned map sends source flat indices to destination
// flat indices of the permuted system.
std::vector<Index> permutation_index_map(const RegisterSystem& src,
                                         const std::vector<Index>& order);

}  // namespace qsw
