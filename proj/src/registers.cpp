#include "qsw/registers.hpp"

#include <algorithm>
#include <unordered_set>

namespace qsw {

RegisterSystem::RegisterSystem(std::vector<Register> regs) : regs_(std::move(regs)) {
  std::unordered_set<std::string> seen;
  total_dim_ = 1;
  for (const auto& r : regs_) {
    if (r.dim < 1) throw ShapeError("register '" + r.name + "' has dim < 1");
    if (!seen.insert(r.name).second)
      throw NameClash("duplicate register name '" + r.name + "'");
    total_dim_ *= r.dim;
  }
  strides_.assign(regs_.size(), 1);
  for (Index i = static_cast<Index>(regs_.size()) - 2; i >= 0; --i)
    strides_[static_cast<size_t>(i)] =
        strides_[static_cast<size_t>(i + 1)] * regs_[static_cast<size_t>(i + 1)].dim;
}

bool RegisterSystem::has(const std::string& name) const {
  return std::any_of(regs_.begin(), regs_.end(),
                     [&](const Register& r) { return r.name == name; });
}

Index RegisterSystem::position(const std::string& name) const {
  for (size_t i = 0; i < regs_.size(); ++i)
    if (regs_[i].name == name) return static_cast<Index>(i);
  throw NameClash("unknown register name '" + name + "'");
}

Index RegisterSystem::dim_of(const std::string& name) const {
  return regs_[static_cast<size_t>(position(name))].dim;
}

Index RegisterSystem::dim_of(const std::vector<std::string>& names) const {
  Index d = 1;
  for (const auto& n : names) d *= dim_of(n);
  return d;
}

std::vector<std::string> RegisterSystem::names() const {
  std::vector<std::string> out;
  out.reserve(regs_.size());
  for (const auto& r : regs_) out.push_back(r.name);
  return out;
}

RegisterSystem RegisterSystem::concat(const RegisterSystem& other) const {
  std::vector<Register> regs = regs_;
  regs.insert(regs.end(), other.regs_.begin(), other.regs_.end());
  return RegisterSystem(std::move(regs));
}

RegisterSystem RegisterSystem::subsystem(const std::vector<std::string>& names) const {
  std::unordered_set<std::string> want(names.begin(), names.end());
  for (const auto& n : names) position(n);  // validate
  std::vector<Register> regs;
  for (const auto& r : regs_)
    if (want.count(r.name)) regs.push_back(r);
  return RegisterSystem(std::move(regs));
}

void RegisterSystem::digits_of(Index flat, std::vector<Index>& out) const {
  out.resize(regs_.size());
  for (size_t i = 0; i < regs_.size(); ++i) {
    out[i] = flat / strides_[i];
    flat %= strides_[i];
  }
}

Index RegisterSystem::flat_of(const std::vector<Index>& digits) const {
  Index flat = 0;
  for (size_t i = 0; i < regs_.size(); ++i) flat += digits[i] * strides_[i];
  return flat;
}

std::vector<Index> permutation_index_map(const RegisterSystem& src,
                                         const std::vector<Index>& order) {
  if (static_cast<Index>(order.size()) != src.size())
    throw ShapeError("permutation order length mismatch");
  std::vector<Register> permuted;
  permuted.reserve(order.size());
  for (Index p : order) permuted.push_back(src.at(p));
  RegisterSystem dst{permuted};

  std::vector<Index> map(static_cast<size_t>(src.total_dim()));
  std::vector<Index> digits, dst_digits(order.size());
  for (Index flat = 0; flat < src.total_dim(); ++flat) {
    src.digits_of(flat, digits);
    for (size_t k = 0; k < order.size(); ++k)
      dst_digits[k] = digits[static_cast<size_t>(order[k])];
    map[static_cast<size_t>(flat)] = dst.flat_of(dst_digits);
  }
  return map;
}

}  // namespace qsw
