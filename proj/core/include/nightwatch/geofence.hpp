#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nightwatch/geo.hpp"

namespace nightwatch {

enum class InfraKind { WindTurbine, Platform, Other };

const char* to_string(InfraKind kind);
InfraKind infra_kind_from_string(const std::string& name);

struct InfraEntry {
  GeoPoint geo;
  InfraKind kind = InfraKind::Other;
  double radius_m = 500.0;
};

/// Point infrastructure with per-entry suppression radii, indexed on a
/// uniform 0.1-degree grid for radius queries. Entries support radii up to
/// 5 km. Immutable once built; swap whole instances to reload.
class InfrastructureIndex {
 public:
  InfrastructureIndex() = default;

  /// Validating constructor: rejects radius_m <= 0 or > 5000.
  static InfrastructureIndex from_entries(std::vector<InfraEntry> entries);

  /// JSON lines: {"lat":…,"lon":…,"kind":…,"radius_m":…}; kind and radius_m
  /// optional (defaults "other", 500 m). Malformed records raise FormatError
  /// with the line number.
  static InfrastructureIndex load_jsonl(const std::string& path);

  /// First entry (lowest input index) whose radius covers the point,
  /// boundary inclusive.
  std::optional<InfraEntry> covering_entry(const GeoPoint& p) const;

  /// Brute-force reference used by tests to validate the grid.
  std::optional<InfraEntry> covering_entry_scan(const GeoPoint& p) const;

  size_t size() const { return entries_.size(); }
  const std::vector<InfraEntry>& entries() const { return entries_; }

 private:
  std::vector<InfraEntry> entries_;
  std::unordered_map<int64_t, std::vector<int>> grid_;
  double max_radius_m_ = 0.0;
};

/// Partition detections by infrastructure coincidence. Returned vectors hold
/// indices into the input; each suppressed index pairs with the entry that
/// caused it.
struct GeofenceResult {
  std::vector<size_t> kept;
  std::vector<std::pair<size_t, InfraEntry>> suppressed;
};

GeofenceResult suppress_near_infrastructure(const std::vector<GeoPoint>& detections,
                                            const InfrastructureIndex& index);

}  // namespace nightwatch
