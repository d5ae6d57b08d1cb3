#pragma once

// Travelling salesman via quantum phase estimation.
//
// A cycle is stored in successor form: node i (1-based) owns a block of
// ceil(log2 n) qubits holding succ(i) - 1, node 1's block first. A diagonal
// unitary gives such a basis state the phase exp(2 pi i L / S), where L is
// the tour length and S a power of two above every possible tour length, so
// phase estimation on S = 2^m precision qubits reads L back exactly.

#include "qsolve/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace qsolve::tsp {

inline constexpr std::size_t kMinNodes = 3;
inline constexpr std::size_t kMaxNodes = 8;

struct TspInstance {
  std::vector<std::vector<std::uint64_t>> weights;

  std::size_t n() const noexcept { return weights.size(); }
  std::uint64_t w(std::size_t i, std::size_t j) const { return i == j ? 0 : weights[i][j]; }
  bool operator==(const TspInstance&) const = default;
};

/// Throws std::invalid_argument unless the matrix is square, symmetric and
/// has at least three nodes. Diagonal entries are ignored.
inline void validate(const TspInstance& instance)
{
  const auto n = instance.n();
  if (n < kMinNodes) {
    throw std::invalid_argument("a tour needs at least 3 nodes, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (instance.weights[i].size() != n) {
      throw std::invalid_argument("adjacency row " + std::to_string(i) + " has " +
                                  std::to_string(instance.weights[i].size()) +
                                  " entries, expected " + std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (instance.weights[i][j] != instance.weights[j][i]) {
        throw std::invalid_argument("adjacency is not symmetric at [" + std::to_string(i) + "][" +
                                    std::to_string(j) + "]");
      }
    }
  }
}

/// Node labels 1..n. Canonical form starts at 1 with the second node smaller
/// than the last.
struct Tour {
  std::vector<std::size_t> nodes;

  std::size_t size() const noexcept { return nodes.size(); }
  auto operator<=>(const Tour&) const = default;
};

inline bool is_permutation_tour(const Tour& tour)
{
  std::vector<std::size_t> sorted = tour.nodes;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != i + 1) {
      return false;
    }
  }
  return !sorted.empty();
}

/// Rotates to start at node 1 and picks the direction with the smaller
/// second node.
inline Tour canonical(const Tour& tour)
{
  if (!is_permutation_tour(tour)) {
    throw std::invalid_argument("tour is not a permutation of 1..n");
  }
  Tour t = tour;
  std::rotate(t.nodes.begin(), std::find(t.nodes.begin(), t.nodes.end(), 1u), t.nodes.end());
  if (t.size() > 2 && t.nodes[1] > t.nodes.back()) {
    std::reverse(t.nodes.begin() + 1, t.nodes.end());
  }
  return t;
}

/// Same cycle, opposite direction, still starting at node 1.
inline Tour reversed(const Tour& tour)
{
  Tour t = tour;
  std::reverse(t.nodes.begin() + 1, t.nodes.end());
  return t;
}

inline std::string to_string(const Tour& tour)
{
  std::string s = "[";
  for (std::size_t i = 0; i < tour.size(); ++i) {
    s += (i ? ", " : "") + std::to_string(tour.nodes[i]);
  }
  return s + "]";
}

/// All (n-1)!/2 canonical tours in lexicographic order.
inline std::vector<Tour> enumerate_cycles(std::size_t n)
{
  if (n < kMinNodes || n > kMaxNodes) {
    throw std::invalid_argument("node count must be in 3..8, got " + std::to_string(n));
  }
  std::vector<std::size_t> rest(n - 1);
  std::iota(rest.begin(), rest.end(), 2u);
  std::vector<Tour> tours;
  do {
    if (rest.front() < rest.back()) {
      Tour t;
      t.nodes.push_back(1);
      t.nodes.insert(t.nodes.end(), rest.begin(), rest.end());
      tours.push_back(std::move(t));
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  return tours;
}

inline std::uint64_t tour_length(const TspInstance& instance, const Tour& tour)
{
  if (tour.size() != instance.n() || !is_permutation_tour(tour)) {
    throw std::invalid_argument("tour does not visit every node exactly once");
  }
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < tour.size(); ++i) {
    const auto from = tour.nodes[i] - 1;
    const auto to = tour.nodes[(i + 1) % tour.size()] - 1;
    total += instance.w(from, to);
  }
  return total;
}

struct PhaseScale {
  std::uint64_t scale = 2;          // S = 2^m
  std::size_t precision_bits = 1;   // m
  bool operator==(const PhaseScale&) const = default;
};

/// S is the smallest power of two above the sum of the n largest edge
/// weights (an upper bound on any tour length), and at least 2.
inline PhaseScale phase_scale(const TspInstance& instance)
{
  validate(instance);
  const auto n = instance.n();
  std::vector<std::uint64_t> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      edges.push_back(instance.weights[i][j]);
    }
  }
  std::sort(edges.begin(), edges.end(), std::greater<>());
  const auto bound = std::accumulate(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n),
                                     std::uint64_t{0});
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::bit_width(bound)));
  if (m > 62) {
    throw ResourceError("tour lengths too large for phase encoding");
  }
  return {std::uint64_t{1} << m, m};
}

/// ceil(log2 n): qubits per successor block.
inline std::size_t block_bits(std::size_t n)
{
  return static_cast<std::size_t>(std::bit_width(n - 1));
}

/// Basis index of the successor encoding of `tour` over n * ceil(log2 n)
/// qubits (node 1's block most significant).
inline std::uint64_t encode_eigenstate(const Tour& tour, std::size_t n)
{
  if (tour.size() != n || !is_permutation_tour(tour)) {
    throw std::invalid_argument("tour does not visit every node exactly once");
  }
  const auto b = block_bits(n);
  std::vector<std::size_t> succ(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    succ[tour.nodes[i]] = tour.nodes[(i + 1) % n];
  }
  std::uint64_t index = 0;
  for (std::size_t node = 1; node <= n; ++node) {
    index = (index << b) | (succ[node] - 1);
  }
  return index;
}

/// Successor node (1-based) stored in node `node`'s block of `index`.
inline std::size_t successor_in(std::uint64_t index, std::size_t node, std::size_t n)
{
  const auto b = block_bits(n);
  const auto shift = (n - node) * b;
  return static_cast<std::size_t>((index >> shift) & ((std::uint64_t{1} << b) - 1)) + 1;
}

/// The canonical tour encoded by `index`, or nullopt if the blocks do not
/// describe one Hamiltonian cycle.
inline std::optional<Tour> decode_eigenstate(std::uint64_t index, std::size_t n)
{
  Tour t;
  std::vector<bool> seen(n + 1, false);
  std::size_t node = 1;
  for (std::size_t step = 0; step < n; ++step) {
    if (seen[node]) {
      return std::nullopt;
    }
    seen[node] = true;
    t.nodes.push_back(node);
    node = successor_in(index, node, n);
    if (node > n) {
      return std::nullopt;
    }
  }
  if (node != 1) {
    return std::nullopt;
  }
  return canonical(t);
}

/// Diagonal operator exp(2 pi i E(x) / S), where E(x) sums w(i, succ(i)) over
/// the blocks of x. Blocks naming an out-of-range node or the node itself
/// contribute nothing.
class PhaseUnitary {
public:
  PhaseUnitary(const TspInstance& instance, std::uint64_t scale)
      : n_(instance.n()), block_bits_(block_bits(instance.n())), scale_(scale)
  {
    validate(instance);
    if (!std::has_single_bit(scale)) {
      throw std::invalid_argument("phase scale must be a power of two");
    }
    const auto qubits = n_ * block_bits_;
    if (qubits > kDefaultQubitCap) {
      throw ResourceError("cycle register of " + std::to_string(qubits) +
                          " qubits exceeds the simulator cap");
    }
    // E(x) is a sum of per-block terms; build it block by block.
    const std::uint64_t block_values = std::uint64_t{1} << block_bits_;
    exponents_.assign(std::uint64_t{1} << qubits, 0);
    for (std::uint64_t x = 0; x < exponents_.size(); ++x) {
      std::uint64_t e = 0;
      for (std::size_t node = 1; node <= n_; ++node) {
        const auto shift = (n_ - node) * block_bits_;
        const auto succ = static_cast<std::size_t>((x >> shift) & (block_values - 1)) + 1;
        if (succ <= n_ && succ != node) {
          e += instance.w(node - 1, succ - 1);
        }
      }
      exponents_[x] = e;
    }
  }

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_qubits() const noexcept { return n_ * block_bits_; }
  std::uint64_t scale() const noexcept { return scale_; }

  /// Integer E(x) of basis state x.
  std::uint64_t exponent(std::uint64_t index) const { return exponents_.at(index); }

  /// Eigenphase E(x) / S reduced into [0, 1).
  double eigenphase(std::uint64_t index) const
  {
    return static_cast<double>(exponent(index) % scale_) / static_cast<double>(scale_);
  }

  /// U^power as a diagonal gate. Exponents are reduced mod S in integers
  /// before conversion to angles; S divides 2^64, so wrapping products are exact.
  Diagonal power_gate(std::uint64_t power) const
  {
    Diagonal d;
    d.angles.resize(exponents_.size());
    for (std::size_t x = 0; x < exponents_.size(); ++x) {
      const auto turns = (exponents_[x] * power) & (scale_ - 1);
      d.angles[x] = 2.0 * std::numbers::pi * static_cast<double>(turns) / static_cast<double>(scale_);
    }
    return d;
  }

private:
  std::size_t n_;
  std::size_t block_bits_;
  std::uint64_t scale_;
  std::vector<std::uint64_t> exponents_;
};

inline PhaseUnitary build_phase_unitary(const TspInstance& instance, std::uint64_t scale)
{
  return PhaseUnitary(instance, scale);
}

struct PhaseEstimate {
  std::uint64_t raw = 0;
  std::size_t precision_bits = 1;
  double probability = 0.0;  // exact probability of `raw` in the final state

  double phase() const
  {
    return static_cast<double>(raw) / std::ldexp(1.0, static_cast<int>(precision_bits));
  }
};

/// Phase estimation circuit without eigenstate preparation. Qubits
/// 0..m-1 form the precision register (qubit 0 most significant); the cycle
/// register follows.
inline Circuit build_qpe_body(const PhaseUnitary& unitary, std::size_t m)
{
  if (m < 1) {
    throw std::invalid_argument("phase estimation needs at least one precision qubit");
  }
  Circuit c;
  const auto precision = c.add_register("precision", m);
  const auto cycle = c.add_register("cycle", unitary.num_qubits());
  for (Qubit q = 0; q < m; ++q) {
    c.h(precision[q]);
  }
  // Precision qubit j carries weight 2^(m-1-j), so it controls U^(2^(m-1-j)).
  for (Qubit q = 0; q < m; ++q) {
    c.append({unitary.power_gate(std::uint64_t{1} << (m - 1 - q)), {precision[q]}, cycle.qubits()});
  }
  c.append(inverse(build_qft(c.num_qubits(), precision.qubits())));
  return c;
}

/// Full phase estimation circuit for the basis eigenstate `eigen_index`.
inline Circuit build_qpe(std::uint64_t eigen_index, const PhaseUnitary& unitary, std::size_t m)
{
  const auto body = build_qpe_body(unitary, m);
  Circuit c(body.num_qubits());
  for (const auto& r : body.registers()) {
    c.insert_register(r);
  }
  const auto cycle = body.reg("cycle");
  for (std::size_t i = 0; i < cycle.width; ++i) {
    if ((eigen_index >> (cycle.width - 1 - i)) & 1u) {
      c.x(cycle[i]);
    }
  }
  return c.append(body);
}

struct QpeRun {
  PhaseEstimate estimate;
  Histogram histogram;
};

namespace detail {

inline QpeRun measure_precision(const StateVector& state, std::size_t m, std::size_t shots,
                                std::uint64_t seed)
{
  std::vector<Qubit> precision(m);
  std::iota(precision.begin(), precision.end(), Qubit{0});
  QpeRun run;
  run.histogram = sample(state, shots, seed, precision);
  // Most frequent outcome; the ordered map makes ties resolve to the smaller value.
  const auto best = std::max_element(run.histogram.counts.begin(), run.histogram.counts.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  run.estimate.raw = std::stoull(best->first, nullptr, 2);
  run.estimate.precision_bits = m;
  run.estimate.probability = marginal_probabilities(state, precision).at(best->first);
  return run;
}

}  // namespace detail

/// Estimates the eigenphase of basis state `eigen_index` on m precision
/// qubits; the estimate is the most frequent of `shots` measurements.
inline QpeRun qpe(std::uint64_t eigen_index, const PhaseUnitary& unitary, std::size_t m,
                  std::size_t shots = 1024, std::uint64_t seed = 0,
                  std::size_t qubit_cap = kDefaultQubitCap)
{
  if (m + unitary.num_qubits() > qubit_cap) {
    throw ResourceError("phase estimation needs " + std::to_string(m + unitary.num_qubits()) +
                        " qubits, exceeding the simulator cap of " + std::to_string(qubit_cap));
  }
  const auto circuit = build_qpe(eigen_index, unitary, m);
  StateVector state(circuit.num_qubits(), qubit_cap);
  apply(state, circuit);
  return detail::measure_precision(state, m, shots, seed);
}

inline std::uint64_t decode_phase(const PhaseEstimate& estimate, std::uint64_t scale)
{
  return static_cast<std::uint64_t>(std::llround(estimate.phase() * static_cast<double>(scale)));
}

struct TspConfig {
  std::uint64_t seed = 0;
  std::size_t shots_per_cycle = 1024;
  std::size_t qubit_cap = kDefaultQubitCap;
};

struct CycleResult {
  Tour tour;
  PhaseEstimate estimate;
  std::uint64_t length = 0;
};

struct TspReport {
  Tour best_tour;
  std::uint64_t best_length = 0;
  std::vector<CycleResult> per_cycle;  // canonical enumeration order
  std::size_t precision_bits = 0;
  std::uint64_t scale = 0;
};

/// Runs phase estimation on every canonical cycle and returns the one with
/// the smallest decoded length (ties: lexicographically smallest tour).
inline TspReport solve(const TspInstance& instance, const TspConfig& config = {})
{
  validate(instance);
  if (config.shots_per_cycle < 1) {
    throw std::invalid_argument("shots per cycle must be at least 1");
  }
  const auto n = instance.n();
  const auto cycles = enumerate_cycles(n);
  const auto scale = phase_scale(instance);
  const auto total = scale.precision_bits + n * block_bits(n);
  if (total > config.qubit_cap) {
    throw ResourceError("phase estimation needs " + std::to_string(total) +
                        " qubits, exceeding the simulator cap of " +
                        std::to_string(config.qubit_cap));
  }
  const PhaseUnitary unitary(instance, scale.scale);
  const auto body = build_qpe_body(unitary, scale.precision_bits);
  const auto cycle_reg = body.reg("cycle");

  TspReport report;
  report.precision_bits = scale.precision_bits;
  report.scale = scale.scale;
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    StateVector state(body.num_qubits(), config.qubit_cap);
    const auto index = encode_eigenstate(cycles[k], n);
    for (std::size_t i = 0; i < cycle_reg.width; ++i) {
      if ((index >> (cycle_reg.width - 1 - i)) & 1u) {
        state.apply_gate(PauliX{}, {}, {cycle_reg[i]});
      }
    }
    apply(state, body);
    auto run = detail::measure_precision(state, scale.precision_bits, config.shots_per_cycle,
                                         config.seed + k);
    report.per_cycle.push_back({cycles[k], run.estimate, decode_phase(run.estimate, scale.scale)});
  }

  const auto best = std::min_element(report.per_cycle.begin(), report.per_cycle.end(),
                                     [](const CycleResult& a, const CycleResult& b) {
                                       return a.length != b.length ? a.length < b.length
                                                                   : a.tour < b.tour;
                                     });
  report.best_tour = best->tour;
  report.best_length = best->length;
  return report;
}

}  // namespace qsolve::tsp
