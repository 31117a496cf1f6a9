#include "fusemap/arch.hpp"

#include "fusemap/errors.hpp"

namespace fusemap {

using nlohmann::json;

namespace {

Rational field_rational(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  try {
    return rational_from_json(obj.at(key));
  } catch (const InputError& e) {
    throw InputError(where + "." + key + ": " + e.what());
  }
}

std::int64_t field_int(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw InputError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

json rational_json(const Rational& r) {
  if (r.get_den() == 1 && r.get_num().fits_slong_p()) return r.get_num().get_si();
  return to_string(r);
}

}  // namespace

std::size_t ArchSpec::level_index(std::string_view name) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].name == name) return i;
  }
  throw InputError("unknown memory level '" + std::string(name) + "'");
}

ArchSpec ArchSpec::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("arch: expected an object");
  if (!doc.contains("levels") || !doc["levels"].is_array()) {
    throw InputError("arch: missing field 'levels'");
  }
  ArchSpec a;
  const json& levels = doc["levels"];
  if (levels.size() < 2) throw InputError("levels: need at least two memory levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string where = "levels[" + std::to_string(i) + "]";
    const json& l = levels[i];
    if (!l.is_object()) throw InputError(where + ": expected an object");
    MemLevel m;
    if (!l.contains("name") || !l["name"].is_string()) throw InputError(where + ": missing field 'name'");
    m.name = l["name"].get<std::string>();
    for (const auto& prev : a.levels) {
      if (prev.name == m.name) throw InputError(where + ".name: duplicate level '" + m.name + "'");
    }
    const bool unbounded = !l.contains("capacity_bytes") || l["capacity_bytes"].is_null();
    if (i == 0 && !unbounded) throw InputError("levels[0].capacity_bytes: the outermost level must be unbounded (null)");
    if (i > 0) {
      if (unbounded) throw InputError(where + ".capacity_bytes: only the outermost level may be unbounded");
      const auto cap = field_int(l, "capacity_bytes", where);
      if (cap <= 0) throw InputError(where + ".capacity_bytes: must be positive");
      m.capacity_bytes = cap;
    }
    m.bandwidth_bytes_per_cycle = field_rational(l, "bandwidth_bytes_per_cycle", where);
    if (m.bandwidth_bytes_per_cycle <= 0) throw InputError(where + ".bandwidth_bytes_per_cycle: must be positive");
    m.energy_per_byte = field_rational(l, "energy_per_byte", where);
    if (m.energy_per_byte < 0) throw InputError(where + ".energy_per_byte: must be nonnegative");
    a.levels.push_back(std::move(m));
  }
  a.mac_energy = field_rational(doc, "mac_energy", "arch");
  if (a.mac_energy < 0) throw InputError("arch.mac_energy: must be nonnegative");
  a.parallelism = field_int(doc, "parallelism", "arch");
  if (a.parallelism <= 0) throw InputError("arch.parallelism: must be positive");
  a.frequency_hz = field_rational(doc, "frequency_hz", "arch");
  if (a.frequency_hz <= 0) throw InputError("arch.frequency_hz: must be positive");
  a.datum_bytes = field_int(doc, "datum_bytes", "arch");
  if (a.datum_bytes <= 0) throw InputError("arch.datum_bytes: must be positive");
  return a;
}

json ArchSpec::to_json() const {
  json doc;
  doc["levels"] = json::array();
  for (const auto& l : levels) {
    json j;
    j["name"] = l.name;
    j["capacity_bytes"] = l.capacity_bytes ? json(*l.capacity_bytes) : json(nullptr);
    j["bandwidth_bytes_per_cycle"] = rational_json(l.bandwidth_bytes_per_cycle);
    j["energy_per_byte"] = rational_json(l.energy_per_byte);
    doc["levels"].push_back(j);
  }
  doc["mac_energy"] = rational_json(mac_energy);
  doc["parallelism"] = parallelism;
  doc["frequency_hz"] = rational_json(frequency_hz);
  doc["datum_bytes"] = datum_bytes;
  return doc;
}

ArchSpec load_arch(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("arch: JSON parse error: ") + e.what());
  }
  return ArchSpec::from_json(doc);
}

ArchSpec tpu_v4i_like() {
  ArchSpec a;
  // 614 GB/s at 1.05 GHz.
  a.levels.push_back({"DRAM", std::nullopt, Rational("614000000000/1050000000"), Rational(64)});
  a.levels.back().bandwidth_bytes_per_cycle.canonicalize();
  a.levels.push_back({"GLB", 128LL * 1024 * 1024, Rational(2048), Rational(2)});
  a.mac_energy = Rational(1, 2);
  a.parallelism = 4 * 128 * 128;
  a.frequency_hz = Rational(1'050'000'000L);
  a.datum_bytes = 1;
  return a;
}

}  // namespace fusemap
