#include "fusemap/costmodel.hpp"

#include <algorithm>

#include "fusemap/errors.hpp"

namespace fusemap {

Objective parse_objective(std::string_view text) {
  if (text == "energy") return Objective::energy;
  if (text == "latency") return Objective::latency;
  if (text == "edp") return Objective::edp;
  throw InputError("objective: expected energy, latency or edp, got '" + std::string(text) + "'");
}

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::energy:
      return "energy";
    case Objective::latency:
      return "latency";
    case Objective::edp:
      return "edp";
  }
  return "energy";
}

CostBreakdown& CostBreakdown::operator+=(const CostBreakdown& other) {
  if (level_bytes.size() < other.level_bytes.size()) level_bytes.resize(other.level_bytes.size(), 0);
  for (std::size_t i = 0; i < other.level_bytes.size(); ++i) level_bytes[i] += other.level_bytes[i];
  ops += other.ops;
  energy += other.energy;
  latency += other.latency;
  return *this;
}

namespace {

// Nodes of `tensor` on the path, outermost level first.
std::vector<const Storage*> chain_of(const EinsumPath& path, const std::string& tensor) {
  std::vector<const Storage*> out;
  for (const auto& s : path.storage) {
    if (s.tensor == tensor) out.push_back(&s);
  }
  std::sort(out.begin(), out.end(), [](const Storage* a, const Storage* b) { return a->level < b->level; });
  return out;
}

}  // namespace

AccessCounts count_accesses(const Workload& w, const EinsumPath& path) {
  const Einsum& e = w.einsum(path.einsum);
  const std::int64_t ops = w.operation_count(path.einsum);
  AccessCounts counts;
  for (const auto& name : e.tensors()) {
    const Tensor& t = w.tensor(name);
    const auto nodes = chain_of(path, name);
    if (nodes.empty()) throw InputError(e.name + ": tensor '" + name + "' is not stored");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      AccessCount& c = counts[{name, nodes[i]->level}];
      if (i > 0) {
        const std::span<const Loop> above(path.loops.data(), nodes[i]->slot);
        std::int64_t instances = 1;
        for (const auto& l : above) instances *= l.trip;
        const std::int64_t moved = tile_elements(w, above, t) * instances;
        (name == e.output ? c.drains : c.fills) = moved;
      }
      if (i + 1 == nodes.size()) c.compute = ops;
    }
  }
  return counts;
}

namespace {

class Tracer {
 public:
  Tracer(const Workload& w, const EinsumPath& path) : w_(w), path_(path), e_(w.einsum(path.einsum)) {
    for (const auto& v : e_.vars) residual_[v] = w.var_extent(v);
    for (const auto& l : path.loops) {
      if (residual_.at(l.var) % l.trip != 0) throw InputError("non-divisor tiling");
      residual_[l.var] /= l.trip;
    }
    for (const auto& name : e_.tensors()) {
      TensorState ts;
      ts.name = name;
      ts.output = name == e_.output;
      for (const auto& v : w.tensor(name).vars) {
        ts.vars.push_back(v);
        ts.extents.push_back(w.var_extent(v));
      }
      const std::int64_t elems = w.tensor_elements(name);
      for (const Storage* s : chain_of(path, name)) {
        ts.nodes.push_back({s->slot, s->level, std::vector<std::uint32_t>(static_cast<std::size_t>(elems), 0), 1, 0});
      }
      tensors_.push_back(std::move(ts));
    }
    for (const auto& v : e_.vars) offset_[v] = 0;
  }

  AccessCounts run() {
    descend(0);
    AccessCounts counts;
    for (const auto& ts : tensors_) {
      for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
        AccessCount& c = counts[{ts.name, ts.nodes[i].level}];
        c.fills = ts.nodes[i].fills;
        c.drains = ts.nodes[i].drains;
        if (i + 1 == ts.nodes.size()) c.compute = ts.compute;
      }
    }
    return counts;
  }

 private:
  struct NodeState {
    std::size_t slot;
    std::size_t level;
    std::vector<std::uint32_t> stamp;
    std::uint32_t epoch;
    std::int64_t resident;
    std::int64_t fills = 0;
    std::int64_t drains = 0;
  };
  struct TensorState {
    std::string name;
    bool output = false;
    std::vector<std::string> vars;
    std::vector<std::int64_t> extents;
    std::vector<NodeState> nodes;
    std::int64_t compute = 0;
  };

  void begin(std::size_t slot) {
    for (auto& ts : tensors_) {
      for (std::size_t i = 1; i < ts.nodes.size(); ++i) {
        if (ts.nodes[i].slot != slot) continue;
        ++ts.nodes[i].epoch;
        ts.nodes[i].resident = 0;
      }
    }
  }

  void end(std::size_t slot) {
    for (auto& ts : tensors_) {
      // Inner levels first so their write-backs land before the parent ends.
      for (std::size_t i = ts.nodes.size(); i-- > 1;) {
        NodeState& n = ts.nodes[i];
        if (n.slot != slot || !ts.output) continue;
        n.drains += n.resident;
        if (i >= 2) {
          NodeState& parent = ts.nodes[i - 1];
          for (std::size_t k = 0; k < n.stamp.size(); ++k) {
            if (n.stamp[k] == n.epoch && parent.stamp[k] != parent.epoch) {
              parent.stamp[k] = parent.epoch;
              ++parent.resident;
            }
          }
        }
      }
    }
  }

  void descend(std::size_t d) {
    begin(d);
    if (d == path_.loops.size()) {
      points(0);
    } else {
      const Loop& l = path_.loops[d];
      const std::int64_t span = span_below(d, l.var);
      const std::int64_t base = offset_[l.var];
      for (std::int64_t it = 0; it < l.trip; ++it) {
        offset_[l.var] = base + it * span;
        descend(d + 1);
      }
      offset_[l.var] = base;
    }
    end(d);
  }

  // Extent covered by one iteration of loop d over `var`.
  std::int64_t span_below(std::size_t d, const std::string& var) const {
    std::int64_t span = residual_.at(var);
    for (std::size_t i = d + 1; i < path_.loops.size(); ++i) {
      if (path_.loops[i].var == var) span *= path_.loops[i].trip;
    }
    return span;
  }

  void points(std::size_t vi) {
    if (vi == e_.vars.size()) {
      touch();
      return;
    }
    const std::string& v = e_.vars[vi];
    const std::int64_t base = offset_[v];
    for (std::int64_t x = 0; x < residual_.at(v); ++x) {
      offset_[v] = base + x;
      points(vi + 1);
    }
    offset_[v] = base;
  }

  void touch() {
    for (auto& ts : tensors_) {
      std::size_t index = 0;
      for (std::size_t k = 0; k < ts.vars.size(); ++k) {
        index = index * static_cast<std::size_t>(ts.extents[k]) + static_cast<std::size_t>(offset_.at(ts.vars[k]));
      }
      ++ts.compute;
      if (ts.output) {
        NodeState& inner = ts.nodes.back();
        if (ts.nodes.size() > 1 && inner.stamp[index] != inner.epoch) {
          inner.stamp[index] = inner.epoch;
          ++inner.resident;
        }
        continue;
      }
      for (std::size_t i = ts.nodes.size(); i-- > 1;) {
        NodeState& n = ts.nodes[i];
        if (n.stamp[index] == n.epoch) break;
        n.stamp[index] = n.epoch;
        ++n.resident;
        ++n.fills;
      }
    }
  }

  const Workload& w_;
  const EinsumPath& path_;
  const Einsum& e_;
  std::map<std::string, std::int64_t> residual_;
  std::map<std::string, std::int64_t> offset_;
  std::vector<TensorState> tensors_;
};

}  // namespace

AccessCounts trace_accesses(const Workload& w, const EinsumPath& path, std::int64_t max_points) {
  if (w.operation_count(path.einsum) > max_points) {
    throw BudgetExceeded("trace_accesses: iteration space of " + std::to_string(w.operation_count(path.einsum)) +
                         " exceeds " + std::to_string(max_points));
  }
  return Tracer(w, path).run();
}

std::vector<std::int64_t> level_bytes(const Workload& w, const ArchSpec& arch, const EinsumPath& path,
                                      const AccessCounts& counts) {
  std::vector<std::int64_t> bytes(arch.num_levels(), 0);
  const Einsum& e = w.einsum(path.einsum);
  for (const auto& name : e.tensors()) {
    const auto nodes = chain_of(path, name);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto it = counts.find({name, nodes[i]->level});
      if (it == counts.end()) continue;
      const AccessCount& c = it->second;
      const std::int64_t moved = (c.fills + c.drains) * arch.datum_bytes;
      bytes[nodes[i]->level] += moved + c.compute * arch.datum_bytes;
      if (i > 0) bytes[nodes[i - 1]->level] += moved;
    }
  }
  return bytes;
}

CostBreakdown cost_from_counts(const Workload& w, const ArchSpec& arch, const EinsumPath& path,
                               const AccessCounts& counts) {
  CostBreakdown c;
  c.level_bytes = level_bytes(w, arch, path, counts);
  c.ops = w.operation_count(path.einsum);
  c.energy = Rational(c.ops) * arch.mac_energy;
  c.latency = Rational(c.ops) / Rational(arch.parallelism);
  for (std::size_t l = 0; l < arch.num_levels(); ++l) {
    const Rational b(c.level_bytes[l]);
    c.energy += b * arch.levels[l].energy_per_byte;
    c.latency = std::max(c.latency, Rational(b / arch.levels[l].bandwidth_bytes_per_cycle));
  }
  return c;
}

CostBreakdown evaluate(const Workload& w, const ArchSpec& arch, const EinsumPath& path) {
  return cost_from_counts(w, arch, path, count_accesses(w, path));
}

CostBreakdown evaluate(const Workload& w, const ArchSpec& arch, const Pmapping& p) {
  CostBreakdown total;
  total.level_bytes.assign(arch.num_levels(), 0);
  for (const auto& path : p.paths) total += evaluate(w, arch, path);
  return total;
}

CostBreakdown evaluate(const Workload& w, const ArchSpec& arch, const Node& tree) {
  return evaluate(w, arch, decompose_tree(w, tree));
}

Rational objective_value(Objective objective, const Rational& energy, const Rational& latency) {
  switch (objective) {
    case Objective::energy:
      return energy;
    case Objective::latency:
      return latency;
    case Objective::edp:
      return energy * latency;
  }
  return energy;
}

}  // namespace fusemap
