#include "fusemap/workload.hpp"

#include <algorithm>
#include <set>

#include "fusemap/errors.hpp"

namespace fusemap {

using nlohmann::json;

std::string_view to_string(TensorRole role) {
  switch (role) {
    case TensorRole::input:
      return "input";
    case TensorRole::intermediate:
      return "intermediate";
    case TensorRole::output:
      return "output";
  }
  return "input";
}

namespace {

TensorRole parse_role(const std::string& text, const std::string& tensor) {
  if (text == "input") return TensorRole::input;
  if (text == "intermediate") return TensorRole::intermediate;
  if (text == "output") return TensorRole::output;
  throw InputError("tensors[" + tensor + "].role: unknown role '" + text + "'");
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw InputError(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<std::string> require_string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + ": expected a list of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(require_string(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

bool Tensor::indexed_by(std::string_view var) const {
  return std::find(vars.begin(), vars.end(), var) != vars.end();
}

std::vector<std::string> Einsum::tensors() const {
  std::vector<std::string> out{output};
  out.insert(out.end(), inputs.begin(), inputs.end());
  return out;
}

bool Einsum::uses(std::string_view tensor) const {
  return output == tensor || std::find(inputs.begin(), inputs.end(), tensor) != inputs.end();
}

bool Einsum::has_var(std::string_view var) const {
  return std::find(vars.begin(), vars.end(), var) != vars.end();
}

Workload Workload::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("workload: expected an object");
  Workload w;

  const json& ranks = require(doc, "ranks", "workload");
  if (!ranks.is_object() || ranks.empty()) throw InputError("ranks: expected a non-empty object");
  std::map<std::string, std::int64_t, std::less<>> rank_extent;
  for (const auto& [name, extent] : ranks.items()) {
    if (!extent.is_number_integer() || extent.get<std::int64_t>() < 1) {
      throw InputError("ranks." + name + ": extent must be a positive integer");
    }
    w.ranks_.push_back({name, extent.get<std::int64_t>()});
    rank_extent[name] = extent.get<std::int64_t>();
  }

  const json& tensors = require(doc, "tensors", "workload");
  if (!tensors.is_array() || tensors.empty()) throw InputError("tensors: expected a non-empty list");
  std::map<std::string, std::optional<TensorRole>, std::less<>> declared_role;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::string where = "tensors[" + std::to_string(i) + "]";
    Tensor t;
    t.name = require_string(require(tensors[i], "name", where), where + ".name");
    t.ranks = require_string_list(require(tensors[i], "ranks", where), where + ".ranks");
    if (t.ranks.empty()) throw InputError(where + ".ranks: must be non-empty");
    std::set<std::string> seen;
    for (const auto& r : t.ranks) {
      if (!rank_extent.contains(r)) throw InputError(where + ".ranks: unknown rank '" + r + "'");
      if (!seen.insert(r).second) throw InputError(where + ".ranks: duplicate rank '" + r + "'");
    }
    if (declared_role.contains(t.name)) throw InputError(where + ".name: duplicate tensor '" + t.name + "'");
    if (tensors[i].contains("role")) {
      declared_role[t.name] = parse_role(require_string(tensors[i]["role"], where + ".role"), t.name);
    } else {
      declared_role[t.name] = std::nullopt;
    }
    w.tensors_.push_back(std::move(t));
  }
  auto tensor_ptr = [&](std::string_view name) -> Tensor* {
    for (auto& t : w.tensors_) {
      if (t.name == name) return &t;
    }
    return nullptr;
  };

  const json& einsums = require(doc, "einsums", "workload");
  if (!einsums.is_array() || einsums.empty()) throw InputError("einsums: expected a non-empty list");
  std::vector<Einsum> parsed;
  std::map<std::string, std::string, std::less<>> var_rank;
  std::set<std::string> tensors_with_vars;
  for (std::size_t i = 0; i < einsums.size(); ++i) {
    const std::string where = "einsums[" + std::to_string(i) + "]";
    const json& e = einsums[i];
    Einsum out;
    out.name = require_string(require(e, "name", where), where + ".name");
    out.output = require_string(require(e, "output", where), where + ".output");
    out.inputs = require_string_list(require(e, "inputs", where), where + ".inputs");
    for (const auto& p : parsed) {
      if (p.name == out.name) throw InputError(where + ".name: duplicate Einsum '" + out.name + "'");
    }
    std::set<std::string> seen;
    for (const auto& t : out.tensors()) {
      if (tensor_ptr(t) == nullptr) throw InputError(where + ": unknown tensor '" + t + "'");
      if (!seen.insert(t).second) throw InputError(where + ": tensor '" + t + "' referenced twice");
    }
    json projections = e.contains("projections") ? e.at("projections") : json::object();
    if (!projections.is_object()) throw InputError(where + ".projections: expected an object");
    for (const auto& [name, _] : projections.items()) {
      if (!seen.contains(name)) {
        throw InputError(where + ".projections: tensor '" + name + "' is not used by this Einsum");
      }
    }
    for (const auto& tname : out.tensors()) {
      Tensor& t = *tensor_ptr(tname);
      std::vector<std::string> vars = t.ranks;
      if (projections.contains(tname)) {
        vars = require_string_list(projections[tname], where + ".projections." + tname);
        if (vars.size() != t.ranks.size()) {
          throw InputError(where + ".projections." + tname + ": expected " +
                           std::to_string(t.ranks.size()) + " rank variables");
        }
      }
      for (std::size_t j = 0; j < vars.size(); ++j) {
        auto [it, inserted] = var_rank.emplace(vars[j], t.ranks[j]);
        if (!inserted && rank_extent.at(it->second) != rank_extent.at(t.ranks[j])) {
          throw InputError(where + ".projections." + tname + ": rank variable '" + vars[j] +
                           "' indexes ranks of different extents");
        }
        if (std::count(vars.begin(), vars.end(), vars[j]) > 1) {
          throw InputError(where + ".projections." + tname + ": duplicate rank variable '" + vars[j] + "'");
        }
      }
      if (tensors_with_vars.contains(tname)) {
        if (t.vars != vars) {
          throw InputError(where + ".projections." + tname +
                           ": projection differs from another Einsum's projection of the same tensor");
        }
      } else {
        t.vars = vars;
        tensors_with_vars.insert(tname);
      }
      for (const auto& v : vars) {
        if (!out.has_var(v)) out.vars.push_back(v);
      }
    }
    parsed.push_back(std::move(out));
  }
  for (auto& t : w.tensors_) {
    if (tensors_with_vars.contains(t.name)) continue;
    t.vars = t.ranks;
    for (const auto& r : t.ranks) var_rank.emplace(r, r);
  }
  for (const auto& [var, rank] : var_rank) w.var_extent_[var] = rank_extent.at(rank);

  // Producers, consumers and roles.
  std::map<std::string, std::vector<std::size_t>, std::less<>> producers, consumers;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    producers[parsed[i].output].push_back(i);
    for (const auto& in : parsed[i].inputs) consumers[in].push_back(i);
  }
  for (auto& t : w.tensors_) {
    const auto np = producers[t.name].size();
    const auto nc = consumers[t.name].size();
    if (np > 1) throw InputError("tensor '" + t.name + "' has multiple producers");
    TensorRole inferred = np == 0 ? TensorRole::input : (nc == 0 ? TensorRole::output : TensorRole::intermediate);
    const auto& declared = declared_role.at(t.name);
    if (declared && *declared != inferred) {
      if (*declared == TensorRole::intermediate && np == 0) {
        throw InputError("tensor '" + t.name + "' is intermediate but has no producer");
      }
      throw InputError("tensors[" + t.name + "].role: declared " + std::string(to_string(*declared)) +
                       " but used as " + std::string(to_string(inferred)));
    }
    t.role = inferred;
    if (t.role != TensorRole::intermediate && np + nc > 1) {
      throw InputError("tensor '" + t.name + "' is read by several Einsums; only intermediates may be shared");
    }
  }

  // Stable Kahn topological sort over producer -> consumer edges.
  const std::size_t n = parsed.size();
  std::vector<std::set<std::size_t>> succ(n);
  std::vector<int> indegree(n, 0);
  for (const auto& [tensor, cons] : consumers) {
    const auto& prods = producers[tensor];
    if (prods.empty()) continue;
    for (auto c : cons) {
      if (succ[prods[0]].insert(c).second) ++indegree[c];
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && indegree[i] == 0) {
        pick = i;
        break;
      }
    }
    if (pick == n) throw InputError("einsums: cyclic dependency between Einsums");
    done[pick] = true;
    order.push_back(pick);
    for (auto s : succ[pick]) --indegree[s];
  }
  for (auto i : order) w.einsums_.push_back(std::move(parsed[i]));

  // Cascade restriction: each intermediate flows from Einsum i to Einsum i+1 only.
  for (const auto& t : w.tensors_) {
    if (t.role != TensorRole::intermediate) continue;
    std::size_t p = 0;
    while (w.einsums_[p].output != t.name) ++p;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(w.einsums_[i].inputs.begin(), w.einsums_[i].inputs.end(), t.name) ==
          w.einsums_[i].inputs.end()) {
        continue;
      }
      if (i != p + 1) {
        throw InputError("tensor '" + t.name +
                         "': intermediates must be consumed only by the next Einsum in dependency order");
      }
    }
  }
  w.boundary_.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i) w.boundary_[i] = w.shared_tensor(i, i + 1);
  return w;
}

json Workload::to_json() const {
  json doc;
  doc["ranks"] = json::object();
  for (const auto& r : ranks_) doc["ranks"][r.name] = r.extent;
  doc["tensors"] = json::array();
  for (const auto& t : tensors_) {
    doc["tensors"].push_back({{"name", t.name}, {"ranks", t.ranks}, {"role", std::string(to_string(t.role))}});
  }
  doc["einsums"] = json::array();
  for (const auto& e : einsums_) {
    json proj = json::object();
    for (const auto& t : e.tensors()) proj[t] = tensor(t).vars;
    doc["einsums"].push_back({{"name", e.name}, {"output", e.output}, {"inputs", e.inputs}, {"projections", proj}});
  }
  return doc;
}

std::size_t Workload::index_of(std::string_view einsum) const {
  for (std::size_t i = 0; i < einsums_.size(); ++i) {
    if (einsums_[i].name == einsum) return i;
  }
  throw InputError("unknown Einsum '" + std::string(einsum) + "'");
}

const Tensor& Workload::tensor(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw InputError("unknown tensor '" + std::string(name) + "'");
}

bool Workload::has_tensor(std::string_view name) const {
  return std::any_of(tensors_.begin(), tensors_.end(), [&](const Tensor& t) { return t.name == name; });
}

std::int64_t Workload::var_extent(std::string_view var) const {
  const auto it = var_extent_.find(var);
  if (it == var_extent_.end()) throw InputError("unknown rank variable '" + std::string(var) + "'");
  return it->second;
}

std::int64_t Workload::tensor_elements(std::string_view name) const {
  std::int64_t n = 1;
  for (const auto& v : tensor(name).vars) n *= var_extent(v);
  return n;
}

std::int64_t Workload::operation_count(std::size_t einsum) const {
  std::int64_t n = 1;
  for (const auto& v : einsums_.at(einsum).vars) n *= var_extent(v);
  return n;
}

std::optional<std::string> Workload::shared_tensor(std::size_t prev, std::size_t next) const {
  if (prev == next) throw InputError("shared_tensor: an Einsum cannot be paired with itself");
  const Einsum& p = einsums_.at(prev);
  const Einsum& c = einsums_.at(next);
  std::optional<std::string> found;
  for (const auto& in : c.inputs) {
    if (in != p.output) continue;
    if (found) throw InputError("shared_tensor: more than one shared intermediate");
    found = in;
  }
  return found;
}

const std::optional<std::string>& Workload::boundary_tensor(std::size_t i) const {
  static const std::optional<std::string> none;
  return i < boundary_.size() ? boundary_[i] : none;
}

Workload load_workload(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("workload: JSON parse error: ") + e.what());
  }
  return Workload::from_json(doc);
}

Workload make_chain(int num_einsums, std::int64_t m,
                    std::span<const std::pair<std::int64_t, std::int64_t>> nk_pattern) {
  if (num_einsums < 1) throw InputError("make_chain: need at least one Einsum");
  if (m < 1) throw InputError("make_chain: extents must be positive");
  if (nk_pattern.empty()) throw InputError("make_chain: empty (N; K) pattern");
  for (const auto& [n, k] : nk_pattern) {
    if (n < 1 || k < 1) throw InputError("make_chain: extents must be positive");
  }
  json doc;
  doc["ranks"]["M"] = m;
  doc["ranks"]["N0"] = nk_pattern[0].second;
  doc["tensors"] = json::array({{{"name", "I"}, {"ranks", {"M", "N0"}}}});
  doc["einsums"] = json::array();
  for (int i = 1; i <= num_einsums; ++i) {
    const auto& [n, k] = nk_pattern[(i - 1) % nk_pattern.size()];
    const std::string prev_rank = "N" + std::to_string(i - 1);
    if (doc["ranks"][prev_rank].get<std::int64_t>() != k) {
      throw InputError("make_chain: K of Einsum " + std::to_string(i) + " differs from the previous N");
    }
    const std::string rank = "N" + std::to_string(i);
    doc["ranks"][rank] = n;
    const std::string w = "W" + std::to_string(i);
    const std::string z = "Z" + std::to_string(i);
    const std::string in = i == 1 ? "I" : "Z" + std::to_string(i - 1);
    doc["tensors"].push_back({{"name", w}, {"ranks", {prev_rank, rank}}});
    doc["tensors"].push_back({{"name", z}, {"ranks", {"M", rank}}});
    doc["einsums"].push_back({{"name", "E" + std::to_string(i)}, {"output", z}, {"inputs", {in, w}}});
  }
  return Workload::from_json(doc);
}

}  // namespace fusemap
