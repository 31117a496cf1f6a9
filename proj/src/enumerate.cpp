#include <algorithm>
#include <map>

#include "fusemap/errors.hpp"
#include "fusemap/ffm.hpp"

namespace fusemap {

namespace {

class PathEnumerator {
 public:
  PathEnumerator(const Workload& w, const ArchSpec& arch, std::size_t einsum, const SearchConfig& cfg)
      : w_(w), arch_(arch), e_(w.einsum(einsum)), einsum_(einsum), cfg_(cfg) {
    if (cfg.max_loops_per_level < 0) throw InputError("max_loops_per_level must be nonnegative");
    if (cfg.max_loop_depth < 0) throw InputError("max_loop_depth must be nonnegative");
    cap_per_var_ = cfg.max_loops_per_level * static_cast<int>(arch.num_levels() - 1);
    for (std::size_t i = 0; i < e_.vars.size(); ++i) var_order_[e_.vars[i]] = i;
    if (einsum > 0) shared_in_ = w.boundary_tensor(einsum - 1);
    shared_out_ = w.boundary_tensor(einsum);
  }

  std::vector<EinsumPath> run() {
    std::map<std::string, std::int64_t> residual;
    std::map<std::string, int> used;
    for (const auto& v : e_.vars) {
      residual[v] = w_.var_extent(v);
      used[v] = 0;
    }
    std::vector<Loop> seq;
    loop_sequences(seq, residual, used);
    return std::move(out_);
  }

 private:
  void loop_sequences(std::vector<Loop>& seq, std::map<std::string, std::int64_t>& residual,
                      std::map<std::string, int>& used) {
    place_storage(seq);
    if (cfg_.max_loop_depth > 0 && seq.size() >= static_cast<std::size_t>(cfg_.max_loop_depth)) return;
    for (const auto& v : e_.vars) {
      if (used[v] >= cap_per_var_) continue;
      if (!cfg_.explore_permutations && !seq.empty() && var_order_.at(v) < var_order_.at(seq.back().var)) continue;
      const std::int64_t r = residual[v];
      for (std::int64_t t = 2; t <= r; ++t) {
        if (r % t != 0) continue;
        seq.push_back({v, t});
        residual[v] = r / t;
        ++used[v];
        loop_sequences(seq, residual, used);
        --used[v];
        residual[v] = r;
        seq.pop_back();
      }
    }
  }

  // Storage choices of one tensor under a fixed loop sequence.
  std::vector<std::vector<Storage>> tensor_options(const std::vector<Loop>& seq, const std::string& name) const {
    const Tensor& t = w_.tensor(name);
    const bool shared = (shared_in_ && *shared_in_ == name) || (shared_out_ && *shared_out_ == name);
    const std::size_t nl = arch_.num_levels();
    const std::size_t n = seq.size();
    std::vector<std::vector<Storage>> options;
    for (std::size_t b = 0; b < (shared ? nl : 1); ++b) {
      std::vector<std::size_t> backing_slots;
      if (b == 0) {
        backing_slots.push_back(0);
      } else {
        for (std::size_t s = 0; s <= n; ++s) {
          backing_slots.push_back(s);
          if (s < n && !t.indexed_by(seq[s].var)) break;
        }
      }
      for (auto bs : backing_slots) {
        std::vector<Storage> base{{bs, b, name}};
        const bool inner = cfg_.inner_storage == InnerStorage::all ||
                           (cfg_.inner_storage == InnerStorage::private_only && !shared);
        if (inner) {
          inner_levels(base, b + 1, bs, n, name, options);
        } else {
          options.push_back(base);
        }
      }
    }
    return options;
  }

  void inner_levels(std::vector<Storage>& cur, std::size_t level, std::size_t min_slot, std::size_t n,
                    const std::string& name, std::vector<std::vector<Storage>>& options) const {
    if (level == arch_.num_levels()) {
      options.push_back(cur);
      return;
    }
    inner_levels(cur, level + 1, min_slot, n, name, options);
    for (std::size_t s = min_slot; s <= n; ++s) {
      cur.push_back({s, level, name});
      inner_levels(cur, level + 1, s, n, name, options);
      cur.pop_back();
    }
  }

  void place_storage(const std::vector<Loop>& seq) {
    const auto tensors = e_.tensors();
    std::vector<std::vector<std::vector<Storage>>> per_tensor;
    for (const auto& name : tensors) per_tensor.push_back(tensor_options(seq, name));
    std::vector<std::size_t> pick(tensors.size(), 0);
    while (true) {
      std::vector<Storage> storage;
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& o = per_tensor[i][pick[i]];
        storage.insert(storage.end(), o.begin(), o.end());
      }
      consider(seq, std::move(storage));
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == per_tensor[i].size()) pick[i++] = 0;
      if (i == pick.size()) break;
    }
  }

  void consider(const std::vector<Loop>& seq, std::vector<Storage> storage) {
    // Relevancy: each loop must sit above a node of a tensor it indexes.
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const bool relevant = std::any_of(storage.begin(), storage.end(), [&](const Storage& s) {
        return s.slot > i && w_.tensor(s.tensor).indexed_by(seq[i].var);
      });
      if (!relevant) return;
    }
    // Loops below both exchange points with no node of this Einsum between
    // them only reorder identical work; keep one order.
    std::size_t exposed = 0;
    for (const auto& shared : {shared_in_, shared_out_}) {
      if (!shared) continue;
      for (const auto& s : storage) {
        if (s.tensor == *shared && s.level == min_level(storage, *shared)) exposed = std::max(exposed, s.slot);
      }
    }
    for (std::size_t i = exposed; i + 1 < seq.size(); ++i) {
      const bool boundary = std::any_of(storage.begin(), storage.end(), [&](const Storage& s) { return s.slot == i + 1; });
      if (!boundary && var_order_.at(seq[i].var) >= var_order_.at(seq[i + 1].var)) return;
    }
    EinsumPath p;
    p.einsum = einsum_;
    p.loops = seq;
    p.storage = std::move(storage);
    p.canonicalize();
    out_.push_back(std::move(p));
    if (static_cast<std::int64_t>(out_.size()) > cfg_.max_pmappings_per_einsum) {
      throw BudgetExceeded(e_.name + ": more than " + std::to_string(cfg_.max_pmappings_per_einsum) +
                           " pmappings; tighten the enumeration limits");
    }
  }

  static std::size_t min_level(const std::vector<Storage>& storage, const std::string& tensor) {
    std::size_t best = SIZE_MAX;
    for (const auto& s : storage) {
      if (s.tensor == tensor) best = std::min(best, s.level);
    }
    return best;
  }

  const Workload& w_;
  const ArchSpec& arch_;
  const Einsum& e_;
  std::size_t einsum_;
  const SearchConfig& cfg_;
  int cap_per_var_ = 0;
  std::map<std::string, std::size_t> var_order_;
  std::optional<std::string> shared_in_;
  std::optional<std::string> shared_out_;
  std::vector<EinsumPath> out_;
};

}  // namespace

std::vector<EinsumPath> enumerate_paths(const Workload& w, const ArchSpec& arch, std::size_t einsum,
                                        const SearchConfig& cfg) {
  return PathEnumerator(w, arch, einsum, cfg).run();
}

}  // namespace fusemap
