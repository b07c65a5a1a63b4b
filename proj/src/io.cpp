#include "qsw/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qsw {

namespace {

using json = nlohmann::ordered_json;

RegisterSystem registers_from_json(const json& j) {
  std::vector<Register> regs;
  for (const auto& r : j)
    regs.push_back({r.at("name").get<std::string>(), r.at("dim").get<Index>()});
  return RegisterSystem(regs);
}

// Hand-rolled writer: 17 significant digits, deterministic layout.
void append_number(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

void append_header(std::string& out, const RegisterSystem& sys, const char* kind) {
  out += "{\"registers\":[";
  for (Index i = 0; i < sys.size(); ++i) {
    if (i) out += ",";
    out += "{\"name\":" + json(sys.at(i).name).dump() + ",\"dim\":" +
           std::to_string(sys.at(i).dim) + "}";
  }
  out += "],\"kind\":\"";
  out += kind;
  out += "\",\"data\":[";
}

void append_entry(std::string& out, bool first, cplx z) {
  if (!first) out += ",";
  out += "[";
  append_number(out, z.real());
  out += ",";
  append_number(out, z.imag());
  out += "]";
}

}  // namespace

std::string to_json_string(const Ket& k) {
  std::string out;
  out.reserve(static_cast<size_t>(k.amps.size()) * 24 + 256);
  append_header(out, k.system, "pure");
  for (Index i = 0; i < k.amps.size(); ++i) append_entry(out, i == 0, k.amps(i));
  out += "]}";
  return out;
}

std::string to_json_string(const DensityOperator& rho) {
  std::string out;
  out.reserve(static_cast<size_t>(rho.matrix.size()) * 24 + 256);
  append_header(out, rho.system, "mixed");
  bool first = true;
  for (Index i = 0; i < rho.matrix.rows(); ++i)
    for (Index j = 0; j < rho.matrix.cols(); ++j) {
      append_entry(out, first, rho.matrix(i, j));
      first = false;
    }
  out += "]}";
  return out;
}

StateVariant state_from_json_string(const std::string& text) {
  json j = json::parse(text);
  RegisterSystem sys = registers_from_json(j.at("registers"));
  const std::string kind = j.at("kind").get<std::string>();
  const auto& data = j.at("data");
  if (kind == "pure") {
    if (static_cast<Index>(data.size()) != sys.total_dim())
      throw ShapeError("state file: pure data length != total dimension");
    cvec v(sys.total_dim());
    for (Index i = 0; i < v.size(); ++i)
      v(i) = cplx(data[static_cast<size_t>(i)][0].get<double>(),
                  data[static_cast<size_t>(i)][1].get<double>());
    Ket k(sys, std::move(v));
    k.validate();
    return k;
  }
  if (kind == "mixed") {
    const Index d = sys.total_dim();
    if (static_cast<Index>(data.size()) != d * d)
      throw ShapeError("state file: mixed data length != dim^2");
    cmat m(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j2 = 0; j2 < d; ++j2) {
        const auto& e = data[static_cast<size_t>(i * d + j2)];
        m(i, j2) = cplx(e[0].get<double>(), e[1].get<double>());
      }
    DensityOperator rho(sys, std::move(m));
    rho.validate();
    return rho;
  }
  throw DomainError("state file: kind must be 'pure' or 'mixed'");
}

StateVariant load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open state file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return state_from_json_string(ss.str());
}

void save_state(const StateVariant& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write state file: " + path);
  if (std::holds_alternative<Ket>(state))
    out << to_json_string(std::get<Ket>(state));
  else
    out << to_json_string(std::get<DensityOperator>(state));
  out << "\n";
}

DensityOperator as_density(const StateVariant& s) {
  if (std::holds_alternative<Ket>(s)) return to_density(std::get<Ket>(s));
  return std::get<DensityOperator>(s);
}

}  // namespace qsw
