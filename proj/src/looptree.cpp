#include "fusemap/looptree.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fusemap/compat.hpp"
#include "fusemap/errors.hpp"

namespace fusemap {

void EinsumPath::canonicalize() { std::sort(storage.begin(), storage.end()); }

const Storage* EinsumPath::backing(std::string_view tensor) const {
  const Storage* best = nullptr;
  for (const auto& s : storage) {
    if (s.tensor == tensor && (best == nullptr || s.level < best->level)) best = &s;
  }
  return best;
}

const Storage* EinsumPath::find(std::string_view tensor, std::size_t level) const {
  for (const auto& s : storage) {
    if (s.tensor == tensor && s.level == level) return &s;
  }
  return nullptr;
}

std::map<std::string, std::int64_t> tile_shape(const Workload& w, std::span<const Loop> loops_above,
                                               const Tensor& tensor) {
  std::map<std::string, std::int64_t> shape;
  for (const auto& v : tensor.vars) shape[v] = w.var_extent(v);
  for (const auto& l : loops_above) {
    auto it = shape.find(l.var);
    if (it == shape.end()) continue;
    if (l.trip < 1 || it->second % l.trip != 0) {
      throw InputError("loop over '" + l.var + "' with trip " + std::to_string(l.trip) +
                       " does not divide the residual extent " + std::to_string(it->second));
    }
    it->second /= l.trip;
  }
  return shape;
}

std::int64_t tile_elements(const Workload& w, std::span<const Loop> loops_above, const Tensor& tensor) {
  std::int64_t n = 1;
  for (const auto& [_, extent] : tile_shape(w, loops_above, tensor)) n *= extent;
  return n;
}

void validate_path(const Workload& w, const ArchSpec& arch, const EinsumPath& path) {
  if (path.einsum >= w.size()) throw InputError("path refers to an unknown Einsum");
  const Einsum& e = w.einsum(path.einsum);
  std::map<std::string, std::int64_t> residual;
  for (const auto& v : e.vars) residual[v] = w.var_extent(v);
  for (const auto& l : path.loops) {
    auto it = residual.find(l.var);
    if (it == residual.end()) throw InputError(e.name + ": loop over foreign rank variable '" + l.var + "'");
    if (l.trip < 1 || it->second % l.trip != 0) {
      throw InputError(e.name + ": loop over '" + l.var + "' does not divide its residual extent");
    }
    it->second /= l.trip;
  }
  if (!std::is_sorted(path.storage.begin(), path.storage.end())) {
    throw InputError(e.name + ": storage nodes not in canonical order");
  }
  std::set<std::pair<std::string, std::size_t>> seen;
  for (const auto& s : path.storage) {
    if (!e.uses(s.tensor)) throw InputError(e.name + ": storage of foreign tensor '" + s.tensor + "'");
    if (s.level >= arch.num_levels()) throw InputError(e.name + ": storage at unknown level");
    if (s.slot > path.loops.size()) throw InputError(e.name + ": storage below the innermost loop slot");
    if (!seen.insert({s.tensor, s.level}).second) {
      throw InputError(e.name + ": tensor '" + s.tensor + "' stored twice at one level");
    }
    if (s.level == 0 && s.slot != 0) throw InputError(e.name + ": outermost level node must be above all loops");
  }
  for (const auto& t : e.tensors()) {
    const Storage* b = path.backing(t);
    if (b == nullptr) throw InputError(e.name + ": tensor '" + t + "' is not stored");
    const bool shared_in = path.einsum > 0 && w.boundary_tensor(path.einsum - 1) == t;
    const bool shared_out = w.boundary_tensor(path.einsum) == t;
    if (!shared_in && !shared_out && b->level != 0) {
      throw InputError(e.name + ": tensor '" + t + "' must be kept at the outermost level");
    }
    if (shared_in || shared_out) {
      const Tensor& tensor = w.tensor(t);
      for (std::size_t i = 0; i < b->slot; ++i) {
        if (!tensor.indexed_by(path.loops[i].var)) {
          throw InputError(e.name + ": loop over '" + path.loops[i].var + "' above the backing node of '" + t + "'");
        }
      }
    }
    std::size_t last_slot = 0;
    for (std::size_t level = 0; level < arch.num_levels(); ++level) {
      const Storage* s = path.find(t, level);
      if (s == nullptr) continue;
      if (s->slot < last_slot) {
        throw InputError(e.name + ": tensor '" + t + "' has an inner level above an outer one");
      }
      last_slot = s->slot;
    }
  }
}

Pmapping Pmapping::single(EinsumPath path) {
  Pmapping p;
  p.paths.push_back(std::move(path));
  return p;
}

Pmapping join(const Workload& w, const Pmapping& left, const Pmapping& right) {
  if (left.paths.empty() || right.paths.size() != 1) {
    throw IncompatibleJoin("join expects a non-empty left pmapping and a single-Einsum right pmapping");
  }
  const EinsumPath& prev = left.paths.back();
  const EinsumPath& next = right.paths.front();
  if (next.einsum != prev.einsum + 1) throw IncompatibleJoin("join must follow workload order");
  std::size_t depth = 0;
  if (const auto& shared = w.boundary_tensor(prev.einsum)) {
    const CompatKey p = compat_key_producer(prev, *shared);
    const CompatKey c = compat_key_consumer(next, *shared);
    if (!compatible(p, c)) throw IncompatibleJoin("incompatible views of shared tensor '" + *shared + "'");
    depth = p.depth();
  }
  Pmapping out = left;
  out.paths.push_back(next);
  out.split_depths.push_back(depth);
  return out;
}

namespace {

Node make_node(std::variant<LoopNode, StorageNode, ComputeNode, SplitNode> kind, std::vector<Node> children = {}) {
  return Node{std::move(kind), std::move(children)};
}

Node chain(const std::vector<Storage>& prefix_storage, std::optional<Loop> loop, Node tail) {
  if (loop) tail = make_node(LoopNode{loop->var, loop->trip}, {std::move(tail)});
  for (auto it = prefix_storage.rbegin(); it != prefix_storage.rend(); ++it) {
    tail = make_node(StorageNode{it->level, it->tensor}, {std::move(tail)});
  }
  return tail;
}

class TreeBuilder {
 public:
  TreeBuilder(const Workload& w, const Pmapping& p) : p_(p), n_(p.paths.size()) {
    regular_.resize(n_);
    shared_.resize(n_);
    for (std::size_t j = 0; j + 1 < n_; ++j) {
      if (const auto& t = w.boundary_tensor(p.paths[j].einsum)) {
        const Storage* b = p.paths[j].backing(*t);
        if (b == nullptr) throw InputError("shared tensor '" + *t + "' is not stored");
        if (b->slot != p.split_depths[j]) throw IncompatibleJoin("split depth differs from the backing node slot");
        shared_[j] = *b;
      }
    }
    for (std::size_t j = 0; j < n_; ++j) {
      for (const auto& s : p.paths[j].storage) {
        const bool produced_here = shared_[j] && *shared_[j] == s;
        const bool consumed_here = j > 0 && shared_[j - 1] && shared_[j - 1]->tensor == s.tensor &&
                                   shared_[j - 1]->level == s.level;
        if (!produced_here && !consumed_here) regular_[j].push_back(s);
      }
    }
    for (std::size_t j = 0; j + 1 < n_; ++j) {
      const auto& a = p.paths[j].loops;
      const auto& b = p.paths[j + 1].loops;
      const std::size_t k = p.split_depths[j];
      if (k > a.size() || k > b.size() || !std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), b.begin())) {
        throw IncompatibleJoin("paths do not share the loops above their split");
      }
    }
  }

  Node build(std::size_t a, std::size_t b, std::size_t d) const {
    if (a == b) return path_tail(a, d);
    std::vector<std::size_t> cuts;
    for (std::size_t j = a; j < b; ++j) {
      if (p_.split_depths[j] == d) cuts.push_back(j);
    }
    if (cuts.empty()) return run_branch(a, b, d);
    std::vector<Storage> above;
    for (auto j : cuts) {
      if (shared_[j]) above.push_back(*shared_[j]);
    }
    std::sort(above.begin(), above.end());
    std::vector<Node> branches;
    std::size_t start = a;
    cuts.push_back(b);
    for (auto cut : cuts) {
      branches.push_back(start == cut ? path_tail(start, d) : run_branch(start, cut, d));
      start = cut + 1;
    }
    return chain(above, std::nullopt, make_node(SplitNode{}, std::move(branches)));
  }

 private:
  // Paths [a, b] share loop d: their slot-d nodes, the loop, then deeper levels.
  Node run_branch(std::size_t a, std::size_t b, std::size_t d) const {
    std::vector<Storage> here;
    for (std::size_t j = a; j <= b; ++j) {
      for (const auto& s : regular_[j]) {
        if (s.slot == d) here.push_back(s);
      }
    }
    std::sort(here.begin(), here.end());
    return chain(here, p_.paths[a].loops.at(d), build(a, b, d + 1));
  }

  Node path_tail(std::size_t j, std::size_t d) const {
    const EinsumPath& path = p_.paths[j];
    Node tail = make_node(ComputeNode{path.einsum});
    for (std::size_t s = path.loops.size() + 1; s-- > d;) {
      std::vector<Storage> here;
      for (const auto& st : regular_[j]) {
        if (st.slot == s) here.push_back(st);
      }
      std::optional<Loop> loop;
      if (s < path.loops.size()) loop = path.loops[s];
      tail = chain(here, loop, std::move(tail));
    }
    return tail;
  }

  const Pmapping& p_;
  std::size_t n_;
  std::vector<std::vector<Storage>> regular_;
  std::vector<std::optional<Storage>> shared_;
};

struct LeafRecord {
  std::size_t einsum;
  std::vector<const Node*> loop_nodes;
  EinsumPath path;
};

void collect(const Workload& w, const Node& node, std::vector<const Node*>& loops,
             std::vector<std::pair<Storage, const Node*>>& stored, std::vector<LeafRecord>& out) {
  if (const auto* l = std::get_if<LoopNode>(&node.kind)) {
    if (node.children.size() != 1) throw InputError("loop node must have one child");
    loops.push_back(&node);
    collect(w, node.children[0], loops, stored, out);
    loops.pop_back();
    (void)l;
  } else if (const auto* s = std::get_if<StorageNode>(&node.kind)) {
    if (node.children.size() != 1) throw InputError("storage node must have one child");
    stored.push_back({Storage{loops.size(), s->level, s->tensor}, &node});
    collect(w, node.children[0], loops, stored, out);
    stored.pop_back();
  } else if (const auto* c = std::get_if<ComputeNode>(&node.kind)) {
    if (!node.children.empty()) throw InputError("compute node must be a leaf");
    LeafRecord rec{c->einsum, loops, {}};
    rec.path.einsum = c->einsum;
    for (const Node* ln : loops) {
      const auto& l = std::get<LoopNode>(ln->kind);
      rec.path.loops.push_back({l.var, l.trip});
    }
    const Einsum& e = w.einsum(c->einsum);
    for (const auto& [st, _] : stored) {
      if (e.uses(st.tensor)) rec.path.storage.push_back(st);
    }
    rec.path.canonicalize();
    out.push_back(std::move(rec));
  } else {
    if (node.children.size() < 2) throw InputError("split node needs at least two branches");
    for (const auto& child : node.children) collect(w, child, loops, stored, out);
  }
}

void render_into(const ArchSpec& arch, const Workload& w, const Node& node, int indent, std::ostringstream& os) {
  const Node* cur = &node;
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  while (true) {
    if (const auto* l = std::get_if<LoopNode>(&cur->kind)) {
      os << pad << "for " << l->var << " in [0," << l->trip << ")\n";
    } else if (const auto* s = std::get_if<StorageNode>(&cur->kind)) {
      os << pad << arch.levels.at(s->level).name << ": " << s->tensor << "\n";
    } else if (const auto* c = std::get_if<ComputeNode>(&cur->kind)) {
      os << pad << "compute " << w.einsum(c->einsum).name << "\n";
      return;
    } else {
      os << pad << "split\n";
      for (const auto& child : cur->children) {
        os << pad << "  branch\n";
        render_into(arch, w, child, indent + 2, os);
      }
      return;
    }
    cur = &cur->children.at(0);
  }
}

void leaves_into(const Node& node, std::vector<std::size_t>& out) {
  if (const auto* c = std::get_if<ComputeNode>(&node.kind)) {
    out.push_back(c->einsum);
    return;
  }
  for (const auto& child : node.children) leaves_into(child, out);
}

}  // namespace

Node build_tree(const Workload& w, const Pmapping& p) {
  if (p.paths.empty()) throw InputError("empty pmapping");
  if (p.split_depths.size() + 1 != p.paths.size()) throw InputError("pmapping needs one split depth per join");
  for (std::size_t j = 0; j + 1 < p.paths.size(); ++j) {
    if (p.paths[j + 1].einsum != p.paths[j].einsum + 1) throw InputError("pmapping paths must be consecutive");
  }
  TreeBuilder b(w, p);
  return b.build(0, p.paths.size() - 1, 0);
}

Pmapping decompose_tree(const Workload& w, const Node& tree) {
  std::vector<const Node*> loops;
  std::vector<std::pair<Storage, const Node*>> stored;
  std::vector<LeafRecord> recs;
  collect(w, tree, loops, stored, recs);
  Pmapping p;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i > 0) {
      if (recs[i].einsum != recs[i - 1].einsum + 1) throw InputError("leaves are not consecutive Einsums");
      const auto& a = recs[i - 1].loop_nodes;
      const auto& b = recs[i].loop_nodes;
      std::size_t k = 0;
      while (k < a.size() && k < b.size() && a[k] == b[k]) ++k;
      p.split_depths.push_back(k);
    }
    p.paths.push_back(std::move(recs[i].path));
  }
  return p;
}

std::vector<Pmapping> decompose(const Workload& w, const Node& tree) {
  std::vector<Pmapping> out;
  for (auto& path : decompose_tree(w, tree).paths) out.push_back(Pmapping::single(std::move(path)));
  return out;
}

std::string render(const Workload& w, const ArchSpec& arch, const Node& tree) {
  std::ostringstream os;
  render_into(arch, w, tree, 0, os);
  return os.str();
}

std::vector<std::size_t> leaves(const Node& tree) {
  std::vector<std::size_t> out;
  leaves_into(tree, out);
  return out;
}

}  // namespace fusemap
