#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "interop/core.hpp"
#include "interop/decimal.hpp"
#include "interop/json.hpp"

namespace interop::geo {

class GeoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decimal degrees, kept as exact decimals so documents reproduce byte for byte.
struct Position {
  Decimal lon;
  Decimal lat;
};

// Closed: the first position is repeated at the end.
using Ring = std::vector<Position>;

struct FieldBoundary {
  std::string id;
  std::string name;
  std::string source_type;
  std::string created_time;
  std::string modified_time;
  std::vector<Ring> rings;
  Decimal area_ha;

  // Throws GeoError on an open/short ring, out-of-range coordinates or a
  // non-positive area.
  void validate() const;
};

// International acre: 10000 m^2 / 4046.8564224 m^2, to 16 significant digits.
inline constexpr const char* kAcresPerHectare = "2.471053814671653";

// One exact multiplication; no intermediate rounding. Negative input throws
// std::invalid_argument.
Decimal hectares_to_acres(const Decimal& hectares);

inline constexpr double kEarthRadiusM = 6378137.0;

// Spherical-excess area of a closed ring (absolute value, orientation
// independent), in hectares. Throws GeoError on fewer than three distinct
// positions or an unclosed ring.
double ring_area_ha(const Ring& ring);

// Provider-style document (a "values" list holding one Boundary).
json::Value boundary_to_provider(const FieldBoundary& boundary);

// Ground-truth adaptation of a provider document to a GeoJSON
// FeatureCollection carrying the properties mandated by the dataset version.
// Throws GeoError on missing geometry or a non-hectare area unit.
json::Value provider_to_geo_reference(const json::Value& provider, DatasetVersion version);

// Property keys mandated for each dataset version, in document order.
std::vector<std::string> version_property_keys(DatasetVersion version);

}  // namespace interop::geo
