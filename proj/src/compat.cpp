#include "fusemap/compat.hpp"

#include "fusemap/errors.hpp"

namespace fusemap {

namespace {

CompatKey key_of(const EinsumPath& path, std::string_view shared, Direction dir) {
  const Storage* b = path.backing(shared);
  if (b == nullptr) {
    throw InputError("tensor '" + std::string(shared) + "' has no storage node in the pmapping");
  }
  CompatKey k;
  k.tensor = std::string(shared);
  k.level = b->level;
  k.loops_above.assign(path.loops.begin(), path.loops.begin() + static_cast<std::ptrdiff_t>(b->slot));
  k.direction = dir;
  return k;
}

}  // namespace

CompatKey compat_key_producer(const EinsumPath& path, std::string_view shared) {
  return key_of(path, shared, Direction::producer);
}

CompatKey compat_key_consumer(const EinsumPath& path, std::string_view shared) {
  return key_of(path, shared, Direction::consumer);
}

bool compatible(const CompatKey& a, const CompatKey& b) {
  return a.direction != b.direction && a.tensor == b.tensor && a.level == b.level &&
         a.loops_above == b.loops_above;
}

std::optional<CompatKey> input_key(const Workload& w, const EinsumPath& path) {
  if (path.einsum == 0) return std::nullopt;
  const auto& shared = w.boundary_tensor(path.einsum - 1);
  if (!shared) return std::nullopt;
  return compat_key_consumer(path, *shared);
}

std::optional<CompatKey> output_key(const Workload& w, const EinsumPath& path) {
  const auto& shared = w.boundary_tensor(path.einsum);
  if (!shared) return std::nullopt;
  return compat_key_producer(path, *shared);
}

CompatKey undirected(CompatKey key) {
  key.direction = Direction::producer;
  return key;
}

std::map<CompatKey, std::vector<std::size_t>> group_by_key(std::span<const CompatKey> keys) {
  std::map<CompatKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) groups[undirected(keys[i])].push_back(i);
  return groups;
}

std::string render_key(const ArchSpec& arch, const std::optional<CompatKey>& key) {
  if (!key) return "none";
  std::string out = key->tensor + "@" + arch.levels.at(key->level).name + "[";
  for (std::size_t i = 0; i < key->loops_above.size(); ++i) {
    if (i > 0) out += ",";
    out += key->loops_above[i].var + ":" + std::to_string(key->loops_above[i].trip);
  }
  return out + "]";
}

}  // namespace fusemap
