#include "fusemap/reservation.hpp"

#include <algorithm>
#include <ostream>

#include "fusemap/compat.hpp"
#include "fusemap/errors.hpp"

namespace fusemap {

std::vector<Reservation> reservations_of(const Workload& w, const ArchSpec& arch, const EinsumPath& path) {
  std::vector<Reservation> out;
  for (const auto& s : path.storage) {
    if (s.level == 0) continue;
    const std::span<const Loop> above(path.loops.data(), s.slot);
    out.push_back({path.einsum, s.tensor, s.level, s.slot,
                   tile_elements(w, above, w.tensor(s.tensor)) * arch.datum_bytes});
  }
  return out;
}

namespace {

class UsageWalker {
 public:
  UsageWalker(const Workload& w, const ArchSpec& arch, std::size_t level) : w_(w), arch_(arch), level_(level) {}

  std::int64_t usage(const Node& node) {
    if (const auto* l = std::get_if<LoopNode>(&node.kind)) {
      loops_.push_back({l->var, l->trip});
      const auto u = usage(node.children.at(0));
      loops_.pop_back();
      return u;
    }
    if (std::holds_alternative<ComputeNode>(node.kind)) return 0;
    if (std::holds_alternative<SplitNode>(node.kind)) return split_usage(node, {});

    // Storage chain; if it ends on a split, hold each node only across the
    // branches between its first and last user.
    std::vector<const StorageNode*> run;
    const Node* cur = &node;
    while (const auto* s = std::get_if<StorageNode>(&cur->kind)) {
      run.push_back(s);
      cur = &cur->children.at(0);
    }
    if (std::holds_alternative<SplitNode>(cur->kind)) return split_usage(*cur, run);
    std::int64_t total = 0;
    for (const auto* s : run) total += size(*s);
    return total + usage(*cur);
  }

 private:
  std::int64_t split_usage(const Node& split, const std::vector<const StorageNode*>& held) {
    const std::size_t nb = split.children.size();
    std::vector<std::int64_t> pending(nb, 0);
    for (const auto* s : held) {
      std::size_t first = nb, last = 0;
      for (std::size_t b = 0; b < nb; ++b) {
        for (auto e : leaves(split.children[b])) {
          if (w_.einsum(e).uses(s->tensor)) {
            first = std::min(first, b);
            last = std::max(last, b);
          }
        }
      }
      const std::int64_t bytes = size(*s);
      for (std::size_t b = first; b <= last && b < nb; ++b) pending[b] += bytes;
    }
    std::int64_t best = 0;
    for (std::size_t b = 0; b < nb; ++b) best = std::max(best, pending[b] + usage(split.children[b]));
    return best;
  }

  std::int64_t size(const StorageNode& s) const {
    if (s.level != level_) return 0;
    return tile_elements(w_, loops_, w_.tensor(s.tensor)) * arch_.datum_bytes;
  }

  const Workload& w_;
  const ArchSpec& arch_;
  std::size_t level_;
  std::vector<Loop> loops_;
};

}  // namespace

std::int64_t max_usage(const Workload& w, const ArchSpec& arch, const Node& tree, std::size_t level) {
  return UsageWalker(w, arch, level).usage(tree);
}

std::vector<std::int64_t> max_usage_all(const Workload& w, const ArchSpec& arch, const Node& tree) {
  std::vector<std::int64_t> out(arch.num_levels(), 0);
  for (std::size_t l = 1; l < arch.num_levels(); ++l) out[l] = max_usage(w, arch, tree, l);
  return out;
}

bool fits(const ArchSpec& arch, const std::vector<std::int64_t>& usage) {
  for (std::size_t l = 1; l < arch.num_levels() && l < usage.size(); ++l) {
    if (usage[l] > *arch.levels[l].capacity_bytes) return false;
  }
  return true;
}

void ReservationProfile::fold_to(std::size_t d) {
  const std::size_t n = depth();
  if (d >= n) return;
  std::int64_t acc = closed[n];
  for (std::size_t t = n; t-- > d;) acc = std::max(closed[t], live[t + 1] + acc);
  closed.resize(d + 1);
  closed[d] = acc;
  live.resize(d + 1);
}

std::int64_t ReservationProfile::usage() const {
  ReservationProfile copy = *this;
  copy.fold_to(0);
  return copy.closed[0];
}

std::vector<std::int64_t> ReservationProfile::flatten() const {
  std::vector<std::int64_t> out(live.begin() + 1, live.end());
  out.insert(out.end(), closed.begin(), closed.end());
  return out;
}

ReservationProfile path_profile(const Workload& w, const ArchSpec& arch, const EinsumPath& path,
                                std::size_t level, std::size_t d_in, std::size_t d_out) {
  const std::size_t m = path.loops.size();
  if (d_in > m || d_out > m) throw InputError("attach depth exceeds the loop count of the path");
  ReservationProfile p;
  p.live.assign(m + 1, 0);
  p.closed.assign(m + 1, 0);
  for (const auto& r : reservations_of(w, arch, path)) {
    if (r.level != level) continue;
    if (r.slot == m) {
      p.closed[m] += r.bytes;
    } else {
      p.live[r.slot + 1] += r.bytes;
    }
  }
  p.fold_to(std::max(d_in, d_out));
  return p;
}

ReservationProfile consolidate_after_join(const ReservationProfile& prof, std::size_t attach,
                                          const ReservationProfile& incoming, std::size_t d_out) {
  ReservationProfile left = prof;
  left.fold_to(attach);
  if (left.depth() < attach) throw InputError("attach position below the open spine");
  if (incoming.depth() < attach || incoming.depth() < d_out) {
    throw InputError("incoming profile shallower than its attach depth");
  }
  ReservationProfile out = incoming;
  for (std::size_t t = 1; t <= attach; ++t) out.live[t] += left.live[t];
  for (std::size_t t = 0; t <= attach; ++t) out.closed[t] = std::max(out.closed[t], left.closed[t]);
  out.fold_to(d_out);
  return out;
}

ReservationProfile profile_of(const Workload& w, const ArchSpec& arch, const Pmapping& p, std::size_t level) {
  ReservationProfile acc;
  for (std::size_t j = 0; j < p.paths.size(); ++j) {
    const EinsumPath& path = p.paths[j];
    const std::size_t d_in = j == 0 ? 0 : p.split_depths[j - 1];
    const auto out = output_key(w, path);
    const std::size_t d_out = out ? out->depth() : 0;
    const ReservationProfile mine = path_profile(w, arch, path, level, d_in, d_out);
    if (j == 0) {
      acc = mine;
      acc.fold_to(d_out);
    } else {
      acc = consolidate_after_join(acc, d_in, mine, d_out);
    }
  }
  return acc;
}

namespace {

class Simulator {
 public:
  Simulator(const Workload& w, const ArchSpec& arch, std::int64_t max_steps)
      : w_(w), arch_(arch), max_steps_(max_steps), diff_(arch.num_levels()) {}

  UsageTimeline run(const Node& tree) {
    visit(tree);
    UsageTimeline t;
    t.peak.assign(arch_.num_levels(), 0);
    std::vector<std::int64_t> cur(arch_.num_levels(), 0);
    for (std::int64_t step = 0; step < steps_; ++step) {
      for (std::size_t l = 0; l < arch_.num_levels(); ++l) {
        if (static_cast<std::size_t>(step) < diff_[l].size()) cur[l] += diff_[l][static_cast<std::size_t>(step)];
        t.peak[l] = std::max(t.peak[l], cur[l]);
      }
      t.bytes.push_back(cur);
    }
    return t;
  }

 private:
  struct Open {
    const StorageNode* node;
    std::int64_t bytes;
    std::int64_t first = -1;
    std::int64_t last = -1;
  };

  void visit(const Node& node) {
    if (const auto* l = std::get_if<LoopNode>(&node.kind)) {
      loops_.push_back({l->var, l->trip});
      for (std::int64_t i = 0; i < l->trip; ++i) visit(node.children.at(0));
      loops_.pop_back();
    } else if (const auto* s = std::get_if<StorageNode>(&node.kind)) {
      const std::int64_t bytes = s->level == 0 ? 0 : tile_elements(w_, loops_, w_.tensor(s->tensor)) * arch_.datum_bytes;
      const std::int64_t start = steps_;
      open_.push_back({s, bytes});
      visit(node.children.at(0));
      const Open o = open_.back();
      open_.pop_back();
      if (o.bytes == 0) return;
      if (!on_split(node)) {
        if (steps_ > start) add(s->level, start, steps_ - 1, o.bytes);
      } else if (o.first >= 0) {
        add(s->level, o.first, o.last, o.bytes);
      }
    } else if (const auto* c = std::get_if<ComputeNode>(&node.kind)) {
      if (steps_ >= max_steps_) throw BudgetExceeded("simulate_usage: more than " + std::to_string(max_steps_) + " steps");
      const Einsum& e = w_.einsum(c->einsum);
      for (auto& o : open_) {
        if (!e.uses(o.node->tensor)) continue;
        if (o.first < 0) o.first = steps_;
        o.last = steps_;
      }
      ++steps_;
    } else {
      for (const auto& child : node.children) visit(child);
    }
  }

  // Storage chains ending on a split live only between their users.
  static bool on_split(const Node& node) {
    const Node* cur = &node;
    while (std::holds_alternative<StorageNode>(cur->kind)) cur = &cur->children.at(0);
    return std::holds_alternative<SplitNode>(cur->kind);
  }

  void add(std::size_t level, std::int64_t first, std::int64_t last, std::int64_t bytes) {
    auto& d = diff_[level];
    if (d.size() < static_cast<std::size_t>(last + 2)) d.resize(static_cast<std::size_t>(last + 2), 0);
    d[static_cast<std::size_t>(first)] += bytes;
    d[static_cast<std::size_t>(last + 1)] -= bytes;
  }

  const Workload& w_;
  const ArchSpec& arch_;
  std::int64_t max_steps_;
  std::int64_t steps_ = 0;
  std::vector<Loop> loops_;
  std::vector<Open> open_;
  std::vector<std::vector<std::int64_t>> diff_;
};

}  // namespace

UsageTimeline simulate_usage(const Workload& w, const ArchSpec& arch, const Node& tree, std::int64_t max_steps) {
  return Simulator(w, arch, max_steps).run(tree);
}

void write_usage_csv(std::ostream& os, const ArchSpec& arch, const UsageTimeline& timeline) {
  os << "timestep,level,bytes\n";
  for (std::size_t t = 0; t < timeline.bytes.size(); ++t) {
    for (std::size_t l = 1; l < arch.num_levels(); ++l) {
      os << t << "," << arch.levels[l].name << "," << timeline.bytes[t][l] << "\n";
    }
  }
}

}  // namespace fusemap
