#pragma once

// Dense statevector simulation.
//
// Bit ordering used throughout qsolve: qubit 0 is the most significant bit of
// a basis-state index and the leftmost character of every bitstring. A
// register |a b c d> therefore reads off directly as the string "abcd".

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace qsolve {

using Amplitude = std::complex<double>;
using Qubit = std::size_t;

inline constexpr std::size_t kDefaultQubitCap = 26;
inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kZeroProbability = 1e-12;

/// Raised when a request exceeds a configured resource limit (qubit cap).
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Gate kinds. Every kind is a unitary; controls are handled by the kernel.
struct Hadamard {
  bool operator==(const Hadamard&) const = default;
};
struct PauliX {
  bool operator==(const PauliX&) const = default;
};
struct PauliZ {
  bool operator==(const PauliZ&) const = default;
};
/// diag(1, e^{i lambda})
struct Phase {
  double lambda = 0.0;
  bool operator==(const Phase&) const = default;
};
struct Swap {
  bool operator==(const Swap&) const = default;
};
/// Diagonal unitary over k target qubits: basis state t of the targets
/// (first target most significant) picks up e^{i angles[t]}.
struct Diagonal {
  std::vector<double> angles;
  bool operator==(const Diagonal&) const = default;
};

using GateKind = std::variant<Hadamard, PauliX, PauliZ, Phase, Swap, Diagonal>;

inline std::string gate_name(const GateKind& kind)
{
  struct {
    std::string operator()(const Hadamard&) const { return "H"; }
    std::string operator()(const PauliX&) const { return "X"; }
    std::string operator()(const PauliZ&) const { return "Z"; }
    std::string operator()(const Phase&) const { return "PHASE"; }
    std::string operator()(const Swap&) const { return "SWAP"; }
    std::string operator()(const Diagonal&) const { return "DIAG"; }
  } visitor;
  return std::visit(visitor, kind);
}

/// Checks the parameters of a gate kind (finite angles, power-of-two table).
inline void validate_gate(const GateKind& kind)
{
  if (const auto* p = std::get_if<Phase>(&kind)) {
    if (!std::isfinite(p->lambda)) {
      throw std::invalid_argument("phase angle must be finite");
    }
  }
  if (const auto* d = std::get_if<Diagonal>(&kind)) {
    const auto size = d->angles.size();
    if (size < 2 || !std::has_single_bit(size)) {
      throw std::invalid_argument("diagonal gate needs 2^k angles with k >= 1");
    }
    for (double a : d->angles) {
      if (!std::isfinite(a)) {
        throw std::invalid_argument("diagonal gate angles must be finite");
      }
    }
  }
}

/// Number of target qubits the gate acts on.
inline std::size_t target_arity(const GateKind& kind)
{
  if (std::holds_alternative<Swap>(kind)) {
    return 2;
  }
  if (const auto* d = std::get_if<Diagonal>(&kind)) {
    return static_cast<std::size_t>(std::countr_zero(d->angles.size()));
  }
  return 1;
}

inline GateKind inverse_gate(const GateKind& kind)
{
  if (const auto* p = std::get_if<Phase>(&kind)) {
    return Phase{-p->lambda};
  }
  if (const auto* d = std::get_if<Diagonal>(&kind)) {
    Diagonal inv{d->angles};
    for (auto& a : inv.angles) {
      a = -a;
    }
    return inv;
  }
  return kind;
}

/// Dense row-major matrix of the (uncontrolled) gate on its targets.
inline std::vector<Amplitude> gate_matrix(const GateKind& kind)
{
  const double s = 1.0 / std::numbers::sqrt2;
  struct {
    double s;
    std::vector<Amplitude> operator()(const Hadamard&) const { return {s, s, s, -s}; }
    std::vector<Amplitude> operator()(const PauliX&) const { return {0, 1, 1, 0}; }
    std::vector<Amplitude> operator()(const PauliZ&) const { return {1, 0, 0, -1}; }
    std::vector<Amplitude> operator()(const Phase& p) const
    {
      return {1, 0, 0, std::polar(1.0, p.lambda)};
    }
    std::vector<Amplitude> operator()(const Swap&) const
    {
      return {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1};
    }
    std::vector<Amplitude> operator()(const Diagonal& d) const
    {
      const auto dim = d.angles.size();
      std::vector<Amplitude> m(dim * dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i) {
        m[i * dim + i] = std::polar(1.0, d.angles[i]);
      }
      return m;
    }
  } visitor{s};
  return std::visit(visitor, kind);
}

/// Measurement outcomes: bitstring -> count. Keys are ordered, so iteration
/// and serialization are deterministic.
struct Histogram {
  std::size_t shots = 0;
  std::map<std::string, std::size_t> counts;

  bool operator==(const Histogram&) const = default;
};

namespace detail {

// Calls fn(index) for every basis index whose bits selected by `fixed_mask`
// equal `fixed_value`, in ascending index order.
template <class Fn>
void for_each_matching(std::size_t num_qubits, std::uint64_t fixed_mask, std::uint64_t fixed_value,
                       Fn&& fn)
{
  // Steps through the subsets of the free bits in increasing order.
  const std::uint64_t all = num_qubits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << num_qubits) - 1;
  const std::uint64_t free_mask = all & ~fixed_mask;
  std::uint64_t x = 0;
  do {
    fn(x | fixed_value);
    x = (x - free_mask) & free_mask;
  } while (x != 0);
}

}  // namespace detail

class StateVector {
public:
  /// All-zero state |0...0> on `num_qubits` qubits.
  explicit StateVector(std::size_t num_qubits, std::size_t qubit_cap = kDefaultQubitCap)
      : num_qubits_(num_qubits)
  {
    if (num_qubits < 1) {
      throw std::invalid_argument("a state needs at least one qubit");
    }
    if (num_qubits > qubit_cap || num_qubits > 62) {
      throw ResourceError("requested " + std::to_string(num_qubits) +
                          " qubits, exceeding the simulator cap of " + std::to_string(qubit_cap));
    }
    amplitudes_.assign(std::size_t{1} << num_qubits, Amplitude{0.0, 0.0});
    amplitudes_[0] = 1.0;
  }

  /// Builds a state from explicit amplitudes; the length must be a power of
  /// two and the vector normalized within kNormTolerance.
  static StateVector from_amplitudes(std::vector<Amplitude> amplitudes)
  {
    const auto size = amplitudes.size();
    if (size < 2 || !std::has_single_bit(size)) {
      throw std::invalid_argument("amplitude count must be 2^n with n >= 1");
    }
    double norm = 0.0;
    for (const auto& a : amplitudes) {
      norm += std::norm(a);
    }
    if (std::abs(norm - 1.0) > kNormTolerance) {
      throw std::invalid_argument("amplitudes are not normalized");
    }
    StateVector state;
    state.num_qubits_ = static_cast<std::size_t>(std::countr_zero(size));
    state.amplitudes_ = std::move(amplitudes);
    return state;
  }

  std::size_t num_qubits() const noexcept { return num_qubits_; }
  std::size_t size() const noexcept { return amplitudes_.size(); }
  std::span<const Amplitude> amplitudes() const noexcept { return amplitudes_; }
  const Amplitude& operator[](std::size_t index) const { return amplitudes_.at(index); }

  /// Bit of a basis index that holds qubit `q`.
  std::uint64_t mask(Qubit q) const noexcept
  {
    return std::uint64_t{1} << (num_qubits_ - 1 - q);
  }

  double norm_squared() const noexcept
  {
    double n = 0.0;
    for (const auto& a : amplitudes_) {
      n += std::norm(a);
    }
    return n;
  }

  std::vector<double> probabilities() const
  {
    std::vector<double> p(amplitudes_.size());
    std::transform(amplitudes_.begin(), amplitudes_.end(), p.begin(),
                   [](const Amplitude& a) { return std::norm(a); });
    return p;
  }

  /// Applies `kind` to `targets`, conditioned on every qubit in `controls`
  /// being |1>. Multi-controlled gates are applied natively.
  void apply_gate(const GateKind& kind, std::span<const Qubit> controls,
                  std::span<const Qubit> targets)
  {
    validate_gate(kind);
    check_operands(kind, controls, targets);

    std::uint64_t control_mask = 0;
    for (Qubit c : controls) {
      control_mask |= mask(c);
    }

    if (const auto* d = std::get_if<Diagonal>(&kind)) {
      apply_diagonal(*d, control_mask, targets);
      return;
    }
    if (std::holds_alternative<Swap>(kind)) {
      const auto m0 = mask(targets[0]);
      const auto m1 = mask(targets[1]);
      detail::for_each_matching(num_qubits_, control_mask | m0 | m1, control_mask | m0,
                                [&](std::uint64_t i) {
                                  std::swap(amplitudes_[i], amplitudes_[(i ^ m0) | m1]);
                                });
      return;
    }

    const auto tm = mask(targets[0]);
    const auto fixed = control_mask | tm;
    if (std::holds_alternative<PauliX>(kind)) {
      detail::for_each_matching(num_qubits_, fixed, control_mask, [&](std::uint64_t i) {
        std::swap(amplitudes_[i], amplitudes_[i | tm]);
      });
    } else if (std::holds_alternative<PauliZ>(kind)) {
      detail::for_each_matching(num_qubits_, fixed, fixed,
                                [&](std::uint64_t i) { amplitudes_[i] = -amplitudes_[i]; });
    } else if (std::holds_alternative<Hadamard>(kind)) {
      const double r = std::numbers::sqrt2 / 2.0;
      detail::for_each_matching(num_qubits_, fixed, control_mask, [&](std::uint64_t i) {
        const auto a0 = amplitudes_[i];
        const auto a1 = amplitudes_[i | tm];
        amplitudes_[i] = (a0 + a1) * r;
        amplitudes_[i | tm] = (a0 - a1) * r;
      });
    } else if (const auto* p = std::get_if<Phase>(&kind)) {
      const auto factor = std::polar(1.0, p->lambda);
      detail::for_each_matching(num_qubits_, fixed, fixed,
                                [&](std::uint64_t i) { amplitudes_[i] *= factor; });
    } else {
      const auto m = gate_matrix(kind);
      detail::for_each_matching(num_qubits_, fixed, control_mask, [&](std::uint64_t i) {
        const auto a0 = amplitudes_[i];
        const auto a1 = amplitudes_[i | tm];
        amplitudes_[i] = m[0] * a0 + m[1] * a1;
        amplitudes_[i | tm] = m[2] * a0 + m[3] * a1;
      });
    }
  }

  void apply_gate(const GateKind& kind, std::initializer_list<Qubit> controls,
                  std::initializer_list<Qubit> targets)
  {
    apply_gate(kind, std::span<const Qubit>(controls.begin(), controls.size()),
               std::span<const Qubit>(targets.begin(), targets.size()));
  }

private:
  StateVector() = default;

  void check_operands(const GateKind& kind, std::span<const Qubit> controls,
                      std::span<const Qubit> targets) const
  {
    if (targets.size() != target_arity(kind)) {
      throw std::invalid_argument(gate_name(kind) + " expects " +
                                  std::to_string(target_arity(kind)) + " target(s), got " +
                                  std::to_string(targets.size()));
    }
    std::uint64_t seen = 0;
    auto claim = [&](Qubit q) {
      if (q >= num_qubits_) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range for " +
                                std::to_string(num_qubits_) + "-qubit state");
      }
      if (seen & mask(q)) {
        throw std::invalid_argument("qubit " + std::to_string(q) +
                                    " used more than once in one gate");
      }
      seen |= mask(q);
    };
    for (Qubit q : targets) {
      claim(q);
    }
    for (Qubit q : controls) {
      claim(q);
    }
  }

  void apply_diagonal(const Diagonal& d, std::uint64_t control_mask, std::span<const Qubit> targets)
  {
    std::vector<Amplitude> factors(d.angles.size());
    std::transform(d.angles.begin(), d.angles.end(), factors.begin(),
                   [](double a) { return std::polar(1.0, a); });

    const auto k = targets.size();
    bool contiguous = true;
    for (std::size_t i = 1; i < k; ++i) {
      contiguous = contiguous && targets[i] == targets[i - 1] + 1;
    }
    if (contiguous) {
      const auto shift = num_qubits_ - targets[0] - k;
      const std::uint64_t low = (std::uint64_t{1} << k) - 1;
      detail::for_each_matching(num_qubits_, control_mask, control_mask, [&](std::uint64_t i) {
        amplitudes_[i] *= factors[(i >> shift) & low];
      });
      return;
    }
    detail::for_each_matching(num_qubits_, control_mask, control_mask, [&](std::uint64_t i) {
      std::uint64_t t = 0;
      for (Qubit q : targets) {
        t = (t << 1) | ((i & mask(q)) ? 1u : 0u);
      }
      amplitudes_[i] *= factors[t];
    });
  }

  std::size_t num_qubits_ = 0;
  std::vector<Amplitude> amplitudes_;
};

inline StateVector init_zero(std::size_t num_qubits, std::size_t qubit_cap = kDefaultQubitCap)
{
  return StateVector(num_qubits, qubit_cap);
}

inline std::vector<double> probabilities(const StateVector& state) { return state.probabilities(); }

/// Bitstring of `qubits` (in the given order) extracted from a basis index.
inline std::string bitstring(const StateVector& state, std::uint64_t index,
                             std::span<const Qubit> qubits)
{
  std::string s(qubits.size(), '0');
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (index & state.mask(qubits[i])) {
      s[i] = '1';
    }
  }
  return s;
}

/// Draws `shots` samples from the full distribution with a std::mt19937_64
/// seeded by `seed`, then projects each outcome onto `qubits`. Outcomes with
/// probability below kZeroProbability are never drawn.
inline Histogram sample(const StateVector& state, std::size_t shots, std::uint64_t seed,
                        std::span<const Qubit> qubits)
{
  if (shots < 1) {
    throw std::invalid_argument("shots must be at least 1");
  }
  if (qubits.empty()) {
    throw std::invalid_argument("cannot sample an empty qubit subset");
  }
  std::uint64_t seen = 0;
  for (Qubit q : qubits) {
    if (q >= state.num_qubits()) {
      throw std::out_of_range("measured qubit " + std::to_string(q) + " out of range");
    }
    if (seen & state.mask(q)) {
      throw std::invalid_argument("measured qubit " + std::to_string(q) + " listed twice");
    }
    seen |= state.mask(q);
  }

  const auto amps = state.amplitudes();
  std::vector<double> cumulative(amps.size());
  double total = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (p >= kZeroProbability) {
      total += p;
      last_nonzero = i;
    }
    cumulative[i] = total;
  }

  std::mt19937_64 rng(seed);
  std::map<std::uint64_t, std::size_t> by_index;
  for (std::size_t s = 0; s < shots; ++s) {
    // 53 random bits -> uniform double in [0, 1).
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = it == cumulative.end() ? last_nonzero
                                            : static_cast<std::size_t>(it - cumulative.begin());
    ++by_index[idx];
  }

  Histogram h;
  h.shots = shots;
  for (const auto& [idx, count] : by_index) {
    h.counts[bitstring(state, idx, qubits)] += count;
  }
  return h;
}

inline Histogram sample(const StateVector& state, std::size_t shots, std::uint64_t seed,
                        std::initializer_list<Qubit> qubits)
{
  return sample(state, shots, seed, std::span<const Qubit>(qubits.begin(), qubits.size()));
}

/// Marginal probability of each bitstring over `qubits`.
inline std::map<std::string, double> marginal_probabilities(const StateVector& state,
                                                            std::span<const Qubit> qubits)
{
  for (Qubit q : qubits) {
    if (q >= state.num_qubits()) {
      throw std::out_of_range("measured qubit " + std::to_string(q) + " out of range");
    }
  }
  // Accumulate by the full index restricted to the measured bits; at most
  // 2^|qubits| distinct keys, visited in ascending order.
  std::uint64_t key_mask = 0;
  for (Qubit q : qubits) {
    key_mask |= state.mask(q);
  }
  std::vector<double> totals(std::size_t{1} << std::min<std::size_t>(qubits.size(), 24), 0.0);
  std::map<std::uint64_t, double> overflow;
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const auto key = i & key_mask;
    if (qubits.size() <= 24) {
      // Pack the measured bits into the low bits (pext).
      std::uint64_t packed = 0;
      unsigned out_bit = 0;
      for (std::uint64_t m = key_mask; m; m &= m - 1, ++out_bit) {
        if (key & (m & (~m + 1))) {
          packed |= std::uint64_t{1} << out_bit;
        }
      }
      totals[packed] += std::norm(amps[i]);
    } else {
      overflow[key] += std::norm(amps[i]);
    }
  }
  std::map<std::string, double> out;
  if (qubits.size() <= 24) {
    for (std::uint64_t packed = 0; packed < totals.size(); ++packed) {
      std::uint64_t key = 0;
      unsigned in_bit = 0;
      for (std::uint64_t m = key_mask; m; m &= m - 1, ++in_bit) {
        if ((packed >> in_bit) & 1u) {
          key |= m & (~m + 1);
        }
      }
      out[bitstring(state, key, qubits)] += totals[packed];
    }
  } else {
    for (const auto& [k, p] : overflow) {
      out[bitstring(state, k, qubits)] += p;
    }
  }
  return out;
}

}  // namespace qsolve
