#pragma once

// Persistence for runs of the iterative process.
//
// Trace stream: one JSON object per line, keys in this order:
//   k            grain index (1-based)
//   d            model parameter
//   avalanche    fired columns in firing order
//   peaks        running maxima of `avalanche`
//   interval_l   smallest l with l..l+D-2 fired, or null
//   max_fired    largest fired column, or null for an empty avalanche
//   fixed_point  dense sigma prefix of pi(k)            (dense mode)
//   fixed_point_sparse  [[column, sigma], ...] nonzeros  (default)
//
// Snapshot: a single JSON object holding everything needed to continue the
// process, with an FNV-1a 64 checksum over the compact dump of the other keys.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kspm/core.hpp"
#include "kspm/strategies.hpp"

namespace kspm {

using ordered_json = nlohmann::ordered_json;

/// Unreadable or inconsistent persisted data.
class corrupt_data : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceLine {
  Value k = 0;
  Parameters params;
  Strategy avalanche;
  std::vector<Column> peaks;
  std::optional<Column> interval_l;
  std::optional<Column> max_fired;
  Configuration fixed_point;

  friend bool operator==(const TraceLine&, const TraceLine&) = default;
};

inline TraceLine make_trace_line(const Avalanche& av, const Configuration& fix) {
  return {av.k, fix.params(), av.strategy, av.peaks, av.interval_l, av.max_fired(), fix.trimmed()};
}

inline std::string serialize_trace_line(const TraceLine& line, bool dense = false) {
  ordered_json j;
  j["k"] = line.k;
  j["d"] = line.params.d;
  j["avalanche"] = line.avalanche;
  j["peaks"] = line.peaks;
  j["interval_l"] = line.interval_l ? ordered_json(*line.interval_l) : ordered_json(nullptr);
  j["max_fired"] = line.max_fired ? ordered_json(*line.max_fired) : ordered_json(nullptr);
  Configuration fix = line.fixed_point.trimmed();
  if (dense) {
    j["fixed_point"] = std::vector<Value>(fix.values().begin(), fix.values().end());
  } else {
    ordered_json sparse = ordered_json::array();
    for (std::size_t i = 0; i < fix.size(); ++i)
      if (fix[static_cast<Column>(i)] != 0) sparse.push_back({static_cast<Column>(i), fix[static_cast<Column>(i)]});
    j["fixed_point_sparse"] = std::move(sparse);
  }
  return j.dump();
}

inline TraceLine parse_trace_line(const std::string& text) {
  try {
    ordered_json j = ordered_json::parse(text);
    TraceLine line;
    line.k = j.at("k").get<Value>();
    line.params = Parameters(j.at("d").get<Value>());
    line.avalanche = j.at("avalanche").get<Strategy>();
    line.peaks = j.at("peaks").get<std::vector<Column>>();
    if (!j.at("interval_l").is_null()) line.interval_l = j["interval_l"].get<Column>();
    if (!j.at("max_fired").is_null()) line.max_fired = j["max_fired"].get<Column>();
    if (j.contains("fixed_point")) {
      line.fixed_point = Configuration(j["fixed_point"].get<std::vector<Value>>(), line.params);
    } else {
      Configuration fix(line.params);
      for (const auto& pair : j.at("fixed_point_sparse")) fix.at_grow(pair.at(0).get<Column>()) = pair.at(1).get<Value>();
      line.fixed_point = fix.trimmed();
    }
    return line;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt_data(std::string("bad trace record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw corrupt_data(std::string("bad trace record: ") + e.what());
  }
}

/// Two-column table: column index, shot count.
inline void write_shot_table(std::ostream& os, const ShotVector& shot) {
  os << "column\tcount\n";
  for (std::size_t i = 0; i < shot.counts.size(); ++i) os << i << '\t' << shot.counts[i] << '\n';
}

/// Column, sigma and height for every column up to the last nonempty one.
inline void write_fixed_point_table(std::ostream& os, const Configuration& fix) {
  os << "column\tsigma\theight\n";
  Column last = fix.last_nonzero();
  auto h = heights(fix, static_cast<std::size_t>(last + 1));
  for (Column i = 0; i <= last; ++i) os << i << '\t' << fix[i] << '\t' << h[static_cast<std::size_t>(i)] << '\n';
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Snapshot {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  Parameters params;
  Value k = 0;
  Configuration fixed_point;
  ShotVector shot;
  std::optional<std::uint64_t> rng_seed;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

namespace detail {

inline ordered_json snapshot_payload(const Snapshot& s) {
  ordered_json j;
  j["format_version"] = s.format_version;
  j["d"] = s.params.d;
  j["k"] = s.k;
  Configuration fix = s.fixed_point.trimmed();
  j["fixed_point"] = std::vector<Value>(fix.values().begin(), fix.values().end());
  j["shot"] = s.shot.counts;
  j["rng_seed"] = s.rng_seed ? ordered_json(*s.rng_seed) : ordered_json(nullptr);
  return j;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace detail

inline std::string serialize_snapshot(const Snapshot& s) {
  ordered_json j = detail::snapshot_payload(s);
  j["checksum"] = detail::hex64(fnv1a64(detail::snapshot_payload(s).dump()));
  return j.dump() + "\n";
}

inline Snapshot parse_snapshot(const std::string& text) {
  Snapshot s;
  std::string stored;
  try {
    ordered_json j = ordered_json::parse(text);
    s.format_version = j.at("format_version").get<int>();
    if (s.format_version != Snapshot::kFormatVersion)
      throw corrupt_data("unsupported snapshot format " + std::to_string(s.format_version));
    s.params = Parameters(j.at("d").get<Value>());
    s.k = j.at("k").get<Value>();
    s.fixed_point = Configuration(j.at("fixed_point").get<std::vector<Value>>(), s.params);
    s.shot.counts = j.at("shot").get<std::vector<Value>>();
    s.shot.n_grains = s.k;
    if (!j.at("rng_seed").is_null()) s.rng_seed = j["rng_seed"].get<std::uint64_t>();
    stored = j.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw corrupt_data(std::string("bad snapshot: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw corrupt_data(std::string("bad snapshot: ") + e.what());
  }
  if (stored != detail::hex64(fnv1a64(detail::snapshot_payload(s).dump())))
    throw corrupt_data("snapshot checksum mismatch");
  return s;
}

/// Writes to a sibling temporary and renames, so a reader never sees a torn file.
inline void write_snapshot_file(const std::filesystem::path& path, const Snapshot& s) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write snapshot " + tmp.string());
    out << serialize_snapshot(s);
    if (!out.flush()) throw std::runtime_error("cannot write snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Snapshot read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read snapshot " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

}  // namespace kspm
