#include "awt/data/io.hpp"

#include "awt/error.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>

namespace awt {

using nlohmann::json;

namespace {

Sample parse_record(const json& j, Domain expected, std::string& class_name) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.domain = parse_domain(j.at("domain").get<std::string>());
  if (s.domain != expected) {
    throw ValidationError("record '" + s.id + "' has domain " + std::string(to_string(s.domain)) + ", expected " +
                          std::string(to_string(expected)));
  }
  s.label = j.at("label").get<int>();
  class_name = j.at("class_name").get<std::string>();
  s.rate_hz = j.at("rate_hz").get<double>();
  const json& rows = j.at("data");
  if (!rows.is_array() || rows.empty()) throw ValidationError("record '" + s.id + "': data must be a non-empty array");
  const Index channels = static_cast<Index>(rows.front().size());
  if (channels != channels_for(expected)) {
    throw ValidationError("record '" + s.id + "': " + std::to_string(channels) + " channels, " +
                          std::string(to_string(expected)) + " needs " + std::to_string(channels_for(expected)));
  }
  s.values.resize(channels, static_cast<Index>(rows.size()));
  for (Index l = 0; l < s.length(); ++l) {
    const json& row = rows[static_cast<std::size_t>(l)];
    if (!row.is_array() || static_cast<Index>(row.size()) != channels) {
      throw ValidationError("record '" + s.id + "': row " + std::to_string(l) + " has inconsistent width");
    }
    for (Index c = 0; c < channels; ++c) s.values(c, l) = row[static_cast<std::size_t>(c)].get<double>();
  }
  if (!(s.rate_hz > 0)) throw ValidationError("record '" + s.id + "': rate_hz must be positive");
  validate_sample(s);
  return s;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, Domain expected) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  Dataset ds;
  ds.domain = expected;
  std::map<int, std::string> names;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      std::string class_name;
      Sample s = parse_record(j, expected, class_name);
      if (ds.samples.empty()) ds.rate_hz = s.rate_hz;
      if (s.rate_hz != ds.rate_hz) throw ValidationError("rate " + std::to_string(s.rate_hz) + " differs from dataset rate");
      if (!ids.insert(s.id).second) throw ValidationError("duplicate id '" + s.id + "'");
      auto [it, inserted] = names.emplace(s.label, class_name);
      if (!inserted && it->second != class_name) {
        throw ValidationError("label " + std::to_string(s.label) + " named both '" + it->second + "' and '" + class_name + "'");
      }
      ds.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ValidationError(where + "parse error: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  if (ds.samples.empty()) throw ValidationError(path.string() + ": dataset is empty");
  int expected_label = 0;
  for (const auto& [label, name] : names) {
    if (label != expected_label) {
      throw ValidationError(path.string() + ": labels are not dense; missing label " + std::to_string(expected_label));
    }
    ds.class_names.push_back(name);
    ++expected_label;
  }
  return ds;
}

std::string to_jsonl_line(const Sample& s, const std::string& class_name) {
  json rows = json::array();
  for (Index l = 0; l < s.length(); ++l) {
    json row = json::array();
    for (Index c = 0; c < s.channels(); ++c) row.push_back(s.values(c, l));
    rows.push_back(std::move(row));
  }
  json j = {{"id", s.id},       {"domain", std::string(to_string(s.domain))},
            {"label", s.label}, {"class_name", class_name},
            {"rate_hz", s.rate_hz}, {"data", std::move(rows)}};
  return j.dump();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write dataset " + path.string());
  for (const Sample& s : ds.samples) {
    const std::string name =
        s.label < ds.class_count() ? ds.class_names[static_cast<std::size_t>(s.label)] : std::to_string(s.label);
    out << to_jsonl_line(s, name) << '\n';
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

PairingManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  PairingManifest m;
  try {
    const json j = json::parse(in);
    if (!j.is_array()) throw ValidationError(path.string() + ": manifest must be a JSON array");
    for (const json& p : j) m.pairs.push_back({p.at("trajectory_id").get<std::string>(), p.at("inertia_id").get<std::string>()});
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const PairingManifest& m, const std::filesystem::path& path) {
  json j = json::array();
  for (const auto& p : m.pairs) j.push_back({{"trajectory_id", p.trajectory_id}, {"inertia_id", p.inertia_id}});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write manifest " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace awt
