#pragma once

// Constraint problems solved with Grover search.
//
// Qubit layout: the search register (all variables, declaration order) comes
// first, followed by one result ancilla per constraint and a shared sum
// scratch register. Each constraint is computed onto its own ancilla; a
// multi-controlled Z over all ancillas flips the phase of satisfying
// assignments; the compute block is then run backwards.

#include "qsolve/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace qsolve::sat {

struct VarDecl {
  std::string name;
  std::size_t bits = 1;

  std::uint64_t max_value() const { return (std::uint64_t{1} << bits) - 1; }
  bool operator==(const VarDecl&) const = default;
};

struct NotEqual {
  std::string a;
  std::string b;
  bool operator==(const NotEqual&) const = default;
};

struct EqualConst {
  std::string a;
  std::uint64_t value = 0;
  bool operator==(const EqualConst&) const = default;
};

struct SumEquals {
  std::vector<std::string> vars;
  std::uint64_t value = 0;
  bool operator==(const SumEquals&) const = default;
};

using Constraint = std::variant<NotEqual, EqualConst, SumEquals>;

struct SatProblem {
  std::vector<VarDecl> vars;
  std::vector<Constraint> constraints;

  const VarDecl* find(std::string_view name) const
  {
    for (const auto& v : vars) {
      if (v.name == name) {
        return &v;
      }
    }
    return nullptr;
  }
  bool operator==(const SatProblem&) const = default;
};

/// Variable name -> value.
using Assignment = std::map<std::string, std::uint64_t>;

struct Diagnostic {
  std::string where;  // e.g. "constraints[2]" or "variables[0]"
  std::string message;
};

inline std::string to_string(const Diagnostic& d) { return d.where + ": " + d.message; }

inline std::string describe(const Constraint& c)
{
  struct {
    std::string operator()(const NotEqual& ne) const { return ne.a + " != " + ne.b; }
    std::string operator()(const EqualConst& eq) const
    {
      return eq.a + " == " + std::to_string(eq.value);
    }
    std::string operator()(const SumEquals& s) const
    {
      std::string out;
      for (std::size_t i = 0; i < s.vars.size(); ++i) {
        out += (i ? " + " : "") + s.vars[i];
      }
      return out + " == " + std::to_string(s.value);
    }
  } visitor;
  return std::visit(visitor, c);
}

/// Every invariant violation in `problem`; empty means valid.
inline std::vector<Diagnostic> validate_problem(const SatProblem& problem)
{
  std::vector<Diagnostic> diags;
  if (problem.vars.empty()) {
    diags.push_back({"variables", "at least one variable is required"});
  }
  if (problem.constraints.empty()) {
    diags.push_back({"constraints", "at least one constraint is required"});
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < problem.vars.size(); ++i) {
    const auto& v = problem.vars[i];
    const auto where = "variables[" + std::to_string(i) + "]";
    if (v.name.empty()) {
      diags.push_back({where, "variable name is empty"});
    }
    if (!names.insert(v.name).second) {
      diags.push_back({where, "duplicate variable '" + v.name + "'"});
    }
    if (v.bits < 1 || v.bits > 32) {
      diags.push_back({where, "variable '" + v.name + "' must have 1..32 bits, has " +
                                  std::to_string(v.bits)});
    }
  }

  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const auto where = "constraints[" + std::to_string(i) + "]";
    auto lookup = [&](const std::string& name) -> const VarDecl* {
      const auto* v = problem.find(name);
      if (!v) {
        diags.push_back({where, "undeclared variable '" + name + "'"});
      }
      return v;
    };
    const auto& c = problem.constraints[i];
    if (const auto* ne = std::get_if<NotEqual>(&c)) {
      const auto* a = lookup(ne->a);
      const auto* b = lookup(ne->b);
      if (a && b && a->bits != b->bits) {
        diags.push_back({where, "'" + ne->a + "' and '" + ne->b +
                                    "' must have equal bit widths for !="});
      }
    } else if (const auto* eq = std::get_if<EqualConst>(&c)) {
      const auto* a = lookup(eq->a);
      if (a && a->bits <= 32 && eq->value > a->max_value()) {
        diags.push_back({where, "value " + std::to_string(eq->value) + " is out of range for '" +
                                    eq->a + "' (" + std::to_string(a->bits) + " bits)"});
      }
    } else if (const auto* s = std::get_if<SumEquals>(&c)) {
      if (s->vars.empty()) {
        diags.push_back({where, "sum constraint needs at least one variable"});
      }
      std::uint64_t reach = 0;
      bool known = true;
      for (const auto& name : s->vars) {
        const auto* v = lookup(name);
        if (v && v->bits <= 32) {
          reach += v->max_value();
        } else {
          known = false;
        }
      }
      if (known && !s->vars.empty() && s->value > reach) {
        diags.push_back({where, "sum value " + std::to_string(s->value) +
                                    " exceeds the largest reachable sum " + std::to_string(reach)});
      }
    }
  }
  return diags;
}

/// Throws std::invalid_argument listing every diagnostic.
inline void require_valid(const SatProblem& problem)
{
  const auto diags = validate_problem(problem);
  if (diags.empty()) {
    return;
  }
  std::string msg = "invalid problem:";
  for (const auto& d : diags) {
    msg += "\n  " + to_string(d);
  }
  throw std::invalid_argument(msg);
}

/// Evaluates every constraint with ordinary integer arithmetic.
inline bool classical_check(const Assignment& assignment, const SatProblem& problem)
{
  auto value = [&](const std::string& name) { return assignment.at(name); };
  for (const auto& c : problem.constraints) {
    if (const auto* ne = std::get_if<NotEqual>(&c)) {
      if (value(ne->a) == value(ne->b)) {
        return false;
      }
    } else if (const auto* eq = std::get_if<EqualConst>(&c)) {
      if (value(eq->a) != eq->value) {
        return false;
      }
    } else if (const auto* s = std::get_if<SumEquals>(&c)) {
      std::uint64_t sum = 0;
      for (const auto& name : s->vars) {
        sum += value(name);
      }
      if (sum != s->value) {
        return false;
      }
    }
  }
  return true;
}

struct QubitLayout {
  std::vector<QubitRegister> variables;
  std::vector<Qubit> result_ancillas;  // one per constraint, same order
  std::optional<QubitRegister> sum_scratch;
  std::size_t search_qubits = 0;
  std::size_t total_qubits = 0;

  const QubitRegister& var(std::string_view name) const
  {
    for (const auto& r : variables) {
      if (r.name == name) {
        return r;
      }
    }
    throw std::out_of_range("no variable register '" + std::string(name) + "'");
  }
  std::vector<Qubit> search_register() const
  {
    std::vector<Qubit> q(search_qubits);
    for (std::size_t i = 0; i < search_qubits; ++i) {
      q[i] = i;
    }
    return q;
  }
  /// Empty circuit carrying this layout's register table.
  Circuit make_circuit() const
  {
    Circuit c(total_qubits);
    for (const auto& r : variables) {
      c.insert_register(r);
    }
    if (!result_ancillas.empty()) {
      c.insert_register({"result", result_ancillas.front(), result_ancillas.size()});
    }
    if (sum_scratch) {
      c.insert_register(*sum_scratch);
    }
    return c;
  }
};

/// Bits needed to hold every value in 0..max_value.
inline std::size_t bits_for(std::uint64_t max_value)
{
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::bit_width(max_value)));
}

inline QubitLayout qubit_layout(const SatProblem& problem, std::size_t qubit_cap = kDefaultQubitCap)
{
  require_valid(problem);
  QubitLayout layout;
  Qubit next = 0;
  for (const auto& v : problem.vars) {
    layout.variables.push_back({v.name, next, v.bits});
    next += v.bits;
  }
  layout.search_qubits = next;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    layout.result_ancillas.push_back(next++);
  }

  std::uint64_t widest_sum = 0;
  bool has_sum = false;
  for (const auto& c : problem.constraints) {
    if (const auto* s = std::get_if<SumEquals>(&c)) {
      has_sum = true;
      std::uint64_t reach = 0;
      for (const auto& name : s->vars) {
        reach += problem.find(name)->max_value();
      }
      widest_sum = std::max(widest_sum, reach);
    }
  }
  if (has_sum) {
    const auto width = bits_for(widest_sum);
    layout.sum_scratch = QubitRegister{"sum", next, width};
    next += width;
  }
  layout.total_qubits = next;
  if (layout.total_qubits > qubit_cap) {
    throw ResourceError("problem needs " + std::to_string(layout.total_qubits) +
                        " qubits, exceeding the simulator cap of " + std::to_string(qubit_cap));
  }
  return layout;
}

namespace detail {

// X on every qubit of `reg` whose bit in `value` (MSB first) is zero, so that
// an all-ones control pattern matches exactly `value`.
inline void flip_zero_bits(Circuit& c, const std::vector<Qubit>& reg, std::uint64_t value)
{
  const auto w = reg.size();
  for (std::size_t i = 0; i < w; ++i) {
    if (((value >> (w - 1 - i)) & 1u) == 0) {
      c.x(reg[i]);
    }
  }
}

// Flips `target` exactly when `reg` holds `value`.
inline void match_constant(Circuit& c, const std::vector<Qubit>& reg, std::uint64_t value,
                           Qubit target)
{
  flip_zero_bits(c, reg, value);
  c.mcx(reg, target);
  flip_zero_bits(c, reg, value);
}

// Adds 2^weight to the register `acc` (MSB first) when `control` is |1>.
// Carries ripple through multi-controlled X gates from the top bit down.
inline void controlled_add_power(Circuit& c, const std::vector<Qubit>& acc, std::size_t weight,
                                 Qubit control)
{
  const auto w = acc.size();
  auto qubit_of_weight = [&](std::size_t r) { return acc[w - 1 - r]; };
  for (std::size_t r = w; r-- > weight;) {
    std::vector<Qubit> controls{control};
    for (std::size_t s = weight; s < r; ++s) {
      controls.push_back(qubit_of_weight(s));
    }
    c.mcx(std::move(controls), qubit_of_weight(r));
  }
}

}  // namespace detail

/// Flips `ancilla` exactly where a != b. Leaves a and b unchanged.
inline Circuit synth_not_equal(const QubitLayout& layout, std::string_view a, std::string_view b,
                               Qubit ancilla)
{
  Circuit c(layout.total_qubits);
  const auto ra = layout.var(a);
  const auto rb = layout.var(b);
  if (ra.width != rb.width) {
    throw std::invalid_argument("!= operands need equal widths");
  }
  if (ra == rb) {
    // a != a never holds; the ancilla stays |0>.
    return c;
  }
  for (std::size_t i = 0; i < ra.width; ++i) {
    c.cx(ra[i], rb[i]);
  }
  detail::match_constant(c, rb.qubits(), 0, ancilla);
  c.x(ancilla);
  for (std::size_t i = 0; i < ra.width; ++i) {
    c.cx(ra[i], rb[i]);
  }
  return c;
}

inline Circuit synth_equal_const(const QubitLayout& layout, std::string_view a,
                                 std::uint64_t value, Qubit ancilla)
{
  Circuit c(layout.total_qubits);
  detail::match_constant(c, layout.var(a).qubits(), value, ancilla);
  return c;
}

/// Flips `ancilla` exactly where the variables sum to `value`. The sum is
/// accumulated into the shared scratch register, compared, and uncomputed,
/// so every non-ancilla qubit is restored.
inline Circuit synth_sum_equals(const QubitLayout& layout, const std::vector<std::string>& vars,
                                std::uint64_t value, Qubit ancilla)
{
  if (!layout.sum_scratch) {
    throw std::invalid_argument("layout has no sum scratch register");
  }
  const auto scratch = layout.sum_scratch->qubits();
  if (std::bit_width(value) > scratch.size()) {
    throw std::invalid_argument("sum value does not fit the scratch register");
  }
  Circuit accumulate(layout.total_qubits);
  for (const auto& name : vars) {
    const auto reg = layout.var(name);
    for (std::size_t i = 0; i < reg.width; ++i) {
      detail::controlled_add_power(accumulate, scratch, reg.width - 1 - i, reg[i]);
    }
  }
  Circuit c(layout.total_qubits);
  c.append(accumulate);
  detail::match_constant(c, scratch, value, ancilla);
  c.append(inverse(accumulate));
  return c;
}

/// Compute block: every constraint evaluated onto its result ancilla.
inline Circuit compute_constraints(const SatProblem& problem, const QubitLayout& layout)
{
  Circuit c(layout.total_qubits);
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const auto anc = layout.result_ancillas[i];
    const auto& con = problem.constraints[i];
    if (const auto* ne = std::get_if<NotEqual>(&con)) {
      c.append(synth_not_equal(layout, ne->a, ne->b, anc));
    } else if (const auto* eq = std::get_if<EqualConst>(&con)) {
      c.append(synth_equal_const(layout, eq->a, eq->value, anc));
    } else if (const auto* s = std::get_if<SumEquals>(&con)) {
      c.append(synth_sum_equals(layout, s->vars, s->value, anc));
    }
  }
  return c;
}

/// Phase oracle: -1 on every search basis state satisfying all constraints.
inline Circuit build_oracle(const SatProblem& problem, const QubitLayout& layout)
{
  const auto compute = compute_constraints(problem, layout);
  Circuit oracle = layout.make_circuit();
  oracle.append(compute);
  std::vector<Qubit> controls(layout.result_ancillas.begin(), layout.result_ancillas.end() - 1);
  oracle.mcz(std::move(controls), layout.result_ancillas.back());
  oracle.append(inverse(compute));
  return oracle;
}

/// Reflection about the uniform superposition of the first `search_qubits`
/// qubits (up to a global phase of -1).
inline Circuit build_diffuser(std::size_t search_qubits, std::size_t circuit_width = 0)
{
  if (search_qubits < 1) {
    throw std::invalid_argument("diffuser needs at least one qubit");
  }
  Circuit c(std::max(search_qubits, circuit_width));
  for (Qubit q = 0; q < search_qubits; ++q) {
    c.h(q);
  }
  for (Qubit q = 0; q < search_qubits; ++q) {
    c.x(q);
  }
  std::vector<Qubit> controls;
  for (Qubit q = 0; q + 1 < search_qubits; ++q) {
    controls.push_back(q);
  }
  c.mcz(std::move(controls), search_qubits - 1);
  for (Qubit q = 0; q < search_qubits; ++q) {
    c.x(q);
  }
  for (Qubit q = 0; q < search_qubits; ++q) {
    c.h(q);
  }
  return c;
}

/// floor(pi/4 * sqrt(2^n / k)), the iteration count maximizing the success
/// probability for k marked states among 2^n.
inline std::size_t grover_iterations(std::size_t n, std::uint64_t k)
{
  if (n < 1 || n > 62) {
    throw std::invalid_argument("search qubit count must be in 1..62");
  }
  const std::uint64_t space = std::uint64_t{1} << n;
  if (k == 0 || k > space) {
    throw std::invalid_argument("solution count must be in 1..2^n");
  }
  return static_cast<std::size_t>(
      std::floor(std::numbers::pi / 4.0 * std::sqrt(static_cast<double>(space) / static_cast<double>(k))));
}

/// ceil(sqrt(2)^j) for j = 0, 1, ... deduplicated, clamped to `cap`, with the
/// cap itself as the last step.
inline std::vector<std::size_t> iteration_schedule(std::size_t cap)
{
  std::vector<std::size_t> schedule;
  for (std::size_t j = 0;; ++j) {
    // sqrt(2)^j exactly for even j, and 2^(j/2) * sqrt(2) otherwise.
    const double half = std::ldexp(1.0, static_cast<int>(j / 2));
    const auto t = j % 2 == 0 ? static_cast<std::size_t>(half)
                              : static_cast<std::size_t>(std::ceil(half * std::numbers::sqrt2));
    const auto step = std::min(t, cap);
    if (schedule.empty() || schedule.back() != step) {
      schedule.push_back(step);
    }
    if (step == cap) {
      break;
    }
  }
  return schedule;
}

/// Grover circuit: uniform state preparation, then `iterations` rounds of
/// oracle and diffuser.
inline Circuit build_grover(const SatProblem& problem, const QubitLayout& layout,
                            std::size_t iterations)
{
  const auto oracle = build_oracle(problem, layout);
  const auto diffuser = build_diffuser(layout.search_qubits, layout.total_qubits);
  Circuit c = layout.make_circuit();
  for (Qubit q = 0; q < layout.search_qubits; ++q) {
    c.h(q);
  }
  for (std::size_t t = 0; t < iterations; ++t) {
    c.append(oracle);
    c.append(diffuser);
  }
  return c;
}

/// Reads an assignment off a search-register bitstring.
inline Assignment decode_bitstring(std::string_view bits, const QubitLayout& layout)
{
  if (bits.size() != layout.search_qubits) {
    throw std::invalid_argument("bitstring '" + std::string(bits) + "' has width " +
                                std::to_string(bits.size()) + ", expected " +
                                std::to_string(layout.search_qubits));
  }
  Assignment a;
  for (const auto& r : layout.variables) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < r.width; ++i) {
      const char ch = bits[r.offset + i];
      if (ch != '0' && ch != '1') {
        throw std::invalid_argument("bitstring contains '" + std::string(1, ch) + "'");
      }
      v = (v << 1) | (ch == '1' ? 1u : 0u);
    }
    a[r.name] = v;
  }
  return a;
}

/// Search-register bitstring of an assignment.
inline std::string encode_assignment(const Assignment& assignment, const QubitLayout& layout)
{
  std::string bits(layout.search_qubits, '0');
  for (const auto& r : layout.variables) {
    const auto v = assignment.at(r.name);
    for (std::size_t i = 0; i < r.width; ++i) {
      if ((v >> (r.width - 1 - i)) & 1u) {
        bits[r.offset + i] = '1';
      }
    }
  }
  return bits;
}

struct Candidate {
  std::string bitstring;
  std::size_t count = 0;
  double frequency = 0.0;
  Assignment assignment;
};

/// Every histogram entry as an assignment, most frequent first, ties broken
/// by bitstring.
inline std::vector<Candidate> decode(const Histogram& histogram, const QubitLayout& layout)
{
  std::vector<Candidate> out;
  for (const auto& [bits, count] : histogram.counts) {
    out.push_back({bits, count, static_cast<double>(count) / static_cast<double>(histogram.shots),
                   decode_bitstring(bits, layout)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& x, const Candidate& y) {
    return x.count != y.count ? x.count > y.count : x.bitstring < y.bitstring;
  });
  return out;
}

struct SolveConfig {
  std::size_t shots = 4096;
  std::uint64_t seed = 0;
  std::optional<double> frequency_threshold;  // default 2 / 2^n
  std::optional<std::size_t> max_iterations;  // default ceil(pi/4 * sqrt(2^n))
  std::size_t qubit_cap = kDefaultQubitCap;
};

struct ScheduleStep {
  std::size_t iterations = 0;
  std::size_t verified = 0;
  bool operator==(const ScheduleStep&) const = default;
};

enum class SolveStatus { solved, no_solution };

struct SolveReport {
  SolveStatus status = SolveStatus::no_solution;
  std::vector<Assignment> solutions;
  std::vector<Candidate> solution_candidates;  // parallel to `solutions`
  std::size_t iterations_used = 0;
  std::size_t shots = 0;
  double frequency_threshold = 0.0;
  Histogram histogram;
  std::vector<ScheduleStep> schedule_trace;
  QubitLayout layout;
};

namespace detail {

inline std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t{words[0]} << 32) | words[1];
}

struct RunOutcome {
  std::size_t iterations = 0;
  Histogram histogram;
  std::vector<Candidate> verified;
};

}  // namespace detail

/// Grover search with a growing iteration schedule.
///
/// Each step measures the search register, keeps every bitstring at or above
/// the frequency threshold (plus the most frequent one), and verifies the
/// decoded assignments classically. The first step with a verified assignment
/// ends discovery. If the number k of verified assignments suggests a
/// different optimum grover_iterations(n, k), one confirmation run at that
/// count is made and kept when it verifies at least as many assignments.
inline SolveReport solve(const SatProblem& problem, const SolveConfig& config = {})
{
  if (config.shots < 1) {
    throw std::invalid_argument("shots must be at least 1");
  }
  const auto layout = qubit_layout(problem, config.qubit_cap);
  const auto n = layout.search_qubits;
  const double threshold =
      config.frequency_threshold.value_or(2.0 / std::ldexp(1.0, static_cast<int>(n)));
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("frequency threshold must be in (0, 1]");
  }
  const auto cap = config.max_iterations.value_or(static_cast<std::size_t>(
      std::ceil(std::numbers::pi / 4.0 * std::sqrt(std::ldexp(1.0, static_cast<int>(n))))));

  const auto oracle = build_oracle(problem, layout);
  const auto diffuser = build_diffuser(n, layout.total_qubits);
  const auto search = layout.search_register();

  StateVector state(layout.total_qubits, config.qubit_cap);
  std::size_t applied = 0;
  auto reset = [&] {
    state = StateVector(layout.total_qubits, config.qubit_cap);
    for (Qubit q = 0; q < n; ++q) {
      state.apply_gate(Hadamard{}, {}, {q});
    }
    applied = 0;
  };
  reset();

  std::size_t run_index = 0;
  auto run = [&](std::size_t iterations) {
    if (iterations < applied) {
      reset();
    }
    for (; applied < iterations; ++applied) {
      apply(state, oracle);
      apply(state, diffuser);
    }
    detail::RunOutcome out;
    out.iterations = iterations;
    out.histogram = sample(state, config.shots, detail::step_seed(config.seed, run_index++), search);
    const auto candidates = decode(out.histogram, layout);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if ((i == 0 || candidates[i].frequency >= threshold) &&
          classical_check(candidates[i].assignment, problem)) {
        out.verified.push_back(candidates[i]);
      }
    }
    return out;
  };

  SolveReport report;
  report.shots = config.shots;
  report.frequency_threshold = threshold;
  report.layout = layout;

  std::optional<detail::RunOutcome> found;
  for (auto t : iteration_schedule(cap)) {
    auto outcome = run(t);
    report.schedule_trace.push_back({t, outcome.verified.size()});
    report.iterations_used = t;
    report.histogram = outcome.histogram;
    if (!outcome.verified.empty()) {
      found = std::move(outcome);
      break;
    }
  }
  if (!found) {
    return report;
  }

  const auto optimum = grover_iterations(n, found->verified.size());
  if (optimum >= 1 && optimum != found->iterations) {
    auto confirm = run(optimum);
    report.schedule_trace.push_back({optimum, confirm.verified.size()});
    if (confirm.verified.size() >= found->verified.size()) {
      found = std::move(confirm);
    }
  }

  report.status = SolveStatus::solved;
  report.iterations_used = found->iterations;
  report.histogram = found->histogram;
  report.solution_candidates = found->verified;
  for (const auto& c : found->verified) {
    report.solutions.push_back(c.assignment);
  }
  return report;
}

}  // namespace qsolve::sat
