#pragma once

#include "qsolve/statevector.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qsolve {

/// A named, contiguous block of qubits inside a circuit.
struct QubitRegister {
  std::string name;
  Qubit offset = 0;
  std::size_t width = 0;

  Qubit operator[](std::size_t i) const { return offset + i; }
  std::vector<Qubit> qubits() const
  {
    std::vector<Qubit> q(width);
    for (std::size_t i = 0; i < width; ++i) {
      q[i] = offset + i;
    }
    return q;
  }
  bool operator==(const QubitRegister&) const = default;
};

struct CircuitOp {
  GateKind kind;
  std::vector<Qubit> controls;
  std::vector<Qubit> targets;

  bool operator==(const CircuitOp&) const = default;
};

class Circuit {
public:
  Circuit() = default;
  explicit Circuit(std::size_t num_qubits) : num_qubits_(num_qubits) {}

  std::size_t num_qubits() const noexcept { return num_qubits_; }
  const std::vector<QubitRegister>& registers() const noexcept { return registers_; }
  const std::vector<CircuitOp>& ops() const noexcept { return ops_; }
  bool empty() const noexcept { return ops_.empty(); }

  /// Declares a register of `width` qubits at the next free offset, growing
  /// the circuit if needed.
  QubitRegister add_register(std::string name, std::size_t width)
  {
    if (width < 1) {
      throw std::invalid_argument("register '" + name + "' needs at least one qubit");
    }
    for (const auto& r : registers_) {
      if (r.name == name) {
        throw std::invalid_argument("duplicate register name '" + name + "'");
      }
    }
    const Qubit offset = registers_.empty() ? 0 : registers_.back().offset + registers_.back().width;
    registers_.push_back({std::move(name), offset, width});
    num_qubits_ = std::max(num_qubits_, offset + width);
    return registers_.back();
  }

  /// Adds a register at an explicit position. Used by the text parser.
  void insert_register(QubitRegister reg)
  {
    if (reg.width < 1 || reg.offset + reg.width > num_qubits_) {
      throw std::invalid_argument("register '" + reg.name + "' does not fit the circuit");
    }
    for (const auto& r : registers_) {
      if (r.name == reg.name) {
        throw std::invalid_argument("duplicate register name '" + reg.name + "'");
      }
      if (reg.offset < r.offset + r.width && r.offset < reg.offset + reg.width) {
        throw std::invalid_argument("register '" + reg.name + "' overlaps '" + r.name + "'");
      }
    }
    registers_.push_back(std::move(reg));
  }

  const QubitRegister& reg(std::string_view name) const
  {
    for (const auto& r : registers_) {
      if (r.name == name) {
        return r;
      }
    }
    throw std::out_of_range("no register named '" + std::string(name) + "'");
  }

  /// Appends one operation. Controls are treated as a set and stored sorted.
  Circuit& append(CircuitOp op)
  {
    validate_gate(op.kind);
    if (op.targets.size() != target_arity(op.kind)) {
      throw std::invalid_argument(gate_name(op.kind) + " expects " +
                                  std::to_string(target_arity(op.kind)) + " target(s)");
    }
    std::sort(op.controls.begin(), op.controls.end());
    std::vector<Qubit> all = op.controls;
    all.insert(all.end(), op.targets.begin(), op.targets.end());
    for (Qubit q : all) {
      if (q >= num_qubits_) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range for " +
                                std::to_string(num_qubits_) + "-qubit circuit");
      }
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      throw std::invalid_argument("controls and targets of one gate must be distinct");
    }
    ops_.push_back(std::move(op));
    return *this;
  }

  /// Appends every op of `fragment`, which must not be wider than this circuit.
  Circuit& append(const Circuit& fragment)
  {
    if (fragment.num_qubits() > num_qubits_) {
      throw std::invalid_argument("fragment is wider than the circuit");
    }
    ops_.insert(ops_.end(), fragment.ops_.begin(), fragment.ops_.end());
    return *this;
  }

  Circuit& h(Qubit q) { return append({Hadamard{}, {}, {q}}); }
  Circuit& x(Qubit q) { return append({PauliX{}, {}, {q}}); }
  Circuit& z(Qubit q) { return append({PauliZ{}, {}, {q}}); }
  Circuit& cx(Qubit control, Qubit target) { return append({PauliX{}, {control}, {target}}); }
  Circuit& mcx(std::vector<Qubit> controls, Qubit target)
  {
    return append({PauliX{}, std::move(controls), {target}});
  }
  Circuit& mcz(std::vector<Qubit> controls, Qubit target)
  {
    return append({PauliZ{}, std::move(controls), {target}});
  }
  Circuit& phase(double lambda, Qubit q, std::vector<Qubit> controls = {})
  {
    return append({Phase{lambda}, std::move(controls), {q}});
  }
  Circuit& swap(Qubit a, Qubit b) { return append({Swap{}, {}, {a, b}}); }

  bool operator==(const Circuit&) const = default;

private:
  std::size_t num_qubits_ = 0;
  std::vector<QubitRegister> registers_;
  std::vector<CircuitOp> ops_;
};

/// Reversed op order with each gate replaced by its inverse.
inline Circuit inverse(const Circuit& circuit)
{
  Circuit inv(circuit.num_qubits());
  for (const auto& r : circuit.registers()) {
    inv.insert_register(r);
  }
  const auto& ops = circuit.ops();
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    inv.append({inverse_gate(it->kind), it->controls, it->targets});
  }
  return inv;
}

/// Quantum Fourier transform over `qubits` (first qubit most significant),
/// including the final swap layer: |j> -> 2^{-m/2} sum_l e^{2 pi i j l / 2^m} |l>.
inline Circuit build_qft(std::size_t circuit_width, const std::vector<Qubit>& qubits)
{
  if (qubits.empty()) {
    throw std::invalid_argument("QFT needs at least one qubit");
  }
  Circuit qft(circuit_width);
  const auto m = qubits.size();
  for (std::size_t i = 0; i < m; ++i) {
    qft.h(qubits[i]);
    for (std::size_t k = i + 1; k < m; ++k) {
      qft.phase(std::numbers::pi / static_cast<double>(std::uint64_t{1} << (k - i)), qubits[i],
                {qubits[k]});
    }
  }
  for (std::size_t i = 0; i < m / 2; ++i) {
    qft.swap(qubits[i], qubits[m - 1 - i]);
  }
  return qft;
}

inline void apply(StateVector& state, const Circuit& circuit)
{
  if (circuit.num_qubits() > state.num_qubits()) {
    throw std::invalid_argument("circuit is wider than the state");
  }
  for (const auto& op : circuit.ops()) {
    state.apply_gate(op.kind, op.controls, op.targets);
  }
}

struct ExecutionResult {
  StateVector state;
  std::optional<Histogram> histogram;
};

/// Runs `circuit` on |0...0>. With shots == 0 only the final state is
/// returned and the sampler is not invoked. An empty `measured` list means
/// every qubit.
inline ExecutionResult execute(const Circuit& circuit, std::size_t shots, std::uint64_t seed,
                               std::vector<Qubit> measured = {},
                               std::size_t qubit_cap = kDefaultQubitCap)
{
  StateVector state(circuit.num_qubits(), qubit_cap);
  apply(state, circuit);
  if (shots == 0) {
    return {std::move(state), std::nullopt};
  }
  if (measured.empty()) {
    measured.resize(circuit.num_qubits());
    for (std::size_t i = 0; i < measured.size(); ++i) {
      measured[i] = i;
    }
  }
  auto histogram = sample(state, shots, seed, measured);
  return {std::move(state), std::move(histogram)};
}

// Text format
//
//   qsolve-circuit v1 qubits=<n>
//   register <name> <offset> <width>
//   <KIND>[(<p0>,<p1>,...)] controls=[c0,c1,...] targets=[t0,...]
//
// Angles are written with 17 significant digits so parsing is exact.

inline constexpr std::string_view kCircuitTextTag = "qsolve-circuit v1";

namespace detail {

inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_qubits(const std::vector<Qubit>& qs)
{
  std::string s = "[";
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (i) {
      s += ',';
    }
    s += std::to_string(qs[i]);
  }
  return s + "]";
}

}  // namespace detail

inline std::string export_text(const Circuit& circuit)
{
  std::ostringstream out;
  out << kCircuitTextTag << " qubits=" << circuit.num_qubits() << '\n';
  for (const auto& r : circuit.registers()) {
    out << "register " << r.name << ' ' << r.offset << ' ' << r.width << '\n';
  }
  for (const auto& op : circuit.ops()) {
    out << gate_name(op.kind);
    if (const auto* p = std::get_if<Phase>(&op.kind)) {
      out << '(' << detail::format_double(p->lambda) << ')';
    } else if (const auto* d = std::get_if<Diagonal>(&op.kind)) {
      out << '(';
      for (std::size_t i = 0; i < d->angles.size(); ++i) {
        out << (i ? "," : "") << detail::format_double(d->angles[i]);
      }
      out << ')';
    }
    out << " controls=" << detail::join_qubits(op.controls)
        << " targets=" << detail::join_qubits(op.targets) << '\n';
  }
  return out.str();
}

namespace detail {

class LineError : public std::invalid_argument {
public:
  LineError(std::size_t line, const std::string& what)
      : std::invalid_argument("line " + std::to_string(line) + ": " + what)
  {
  }
};

inline std::size_t parse_size(std::string_view text, std::size_t line)
{
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](char c) {
        return c >= '0' && c <= '9';
      })) {
    throw LineError(line, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return std::stoull(std::string(text));
}

inline double parse_double(std::string_view text, std::size_t line)
{
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw LineError(line, "expected a number, got '" + s + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep)
{
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

inline std::vector<Qubit> parse_qubit_list(std::string_view field, std::string_view key,
                                           std::size_t line)
{
  const std::string prefix = std::string(key) + "=[";
  if (field.substr(0, prefix.size()) != prefix || field.back() != ']') {
    throw LineError(line, "expected " + std::string(key) + "=[...]");
  }
  const auto body = field.substr(prefix.size(), field.size() - prefix.size() - 1);
  std::vector<Qubit> qs;
  if (body.empty()) {
    return qs;
  }
  for (auto part : split(body, ',')) {
    qs.push_back(parse_size(part, line));
  }
  return qs;
}

}  // namespace detail

/// Inverse of export_text. Errors carry the offending line number.
inline Circuit parse_text(std::string_view text)
{
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) {
    throw std::invalid_argument("empty circuit text");
  }
  ++lineno;
  const std::string header_prefix = std::string(kCircuitTextTag) + " qubits=";
  if (line.rfind(header_prefix, 0) != 0) {
    throw detail::LineError(lineno, "missing '" + std::string(kCircuitTextTag) + "' header");
  }
  Circuit circuit(detail::parse_size(std::string_view(line).substr(header_prefix.size()), lineno));

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ' ');
    if (fields[0] == "register") {
      if (fields.size() != 4) {
        throw detail::LineError(lineno, "register line needs name, offset and width");
      }
      try {
        circuit.insert_register({std::string(fields[1]), detail::parse_size(fields[2], lineno),
                                 detail::parse_size(fields[3], lineno)});
      } catch (const detail::LineError&) {
        throw;
      } catch (const std::exception& e) {
        throw detail::LineError(lineno, e.what());
      }
      continue;
    }
    if (fields.size() != 3) {
      throw detail::LineError(lineno, "gate line needs kind, controls and targets");
    }

    std::string_view head = fields[0];
    std::vector<double> params;
    if (const auto open = head.find('('); open != std::string_view::npos) {
      if (head.back() != ')') {
        throw detail::LineError(lineno, "unterminated parameter list");
      }
      for (auto p : detail::split(head.substr(open + 1, head.size() - open - 2), ',')) {
        params.push_back(detail::parse_double(p, lineno));
      }
      head = head.substr(0, open);
    }

    GateKind kind;
    const bool parametric = head == "PHASE" || head == "DIAG";
    if (parametric == params.empty()) {
      throw detail::LineError(lineno, parametric ? "missing gate parameters"
                                                 : "unexpected gate parameters");
    }
    if (head == "H") {
      kind = Hadamard{};
    } else if (head == "X") {
      kind = PauliX{};
    } else if (head == "Z") {
      kind = PauliZ{};
    } else if (head == "SWAP") {
      kind = Swap{};
    } else if (head == "PHASE") {
      if (params.size() != 1) {
        throw detail::LineError(lineno, "PHASE takes exactly one angle");
      }
      kind = Phase{params[0]};
    } else if (head == "DIAG") {
      kind = Diagonal{std::move(params)};
    } else {
      throw detail::LineError(lineno, "unknown gate kind '" + std::string(head) + "'");
    }

    try {
      circuit.append({std::move(kind), detail::parse_qubit_list(fields[1], "controls", lineno),
                      detail::parse_qubit_list(fields[2], "targets", lineno)});
    } catch (const detail::LineError&) {
      throw;
    } catch (const std::exception& e) {
      throw detail::LineError(lineno, e.what());
    }
  }
  return circuit;
}

}  // namespace qsolve
