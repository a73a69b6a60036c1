#include "interop/geoconv.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

namespace interop::geo {

namespace {

using json::Member;
using json::Value;

const Value& require(const Value& parent, std::string_view key, std::string_view what) {
  const Value* v = parent.find(key);
  if (v == nullptr) throw GeoError("missing " + std::string(what) + " (\"" + std::string(key) + "\")");
  return *v;
}

const json::Array& require_array(const Value& parent, std::string_view key, std::string_view what) {
  const Value& v = require(parent, key, what);
  if (!v.is_array() || v.as_array().empty()) {
    throw GeoError("missing " + std::string(what) + " (\"" + std::string(key) + "\" is not a non-empty array)");
  }
  return v.as_array();
}

Value coordinate_number(const Value& point, std::string_view key) {
  const Value& v = require(point, key, "coordinate");
  if (!v.is_number()) throw GeoError("coordinate \"" + std::string(key) + "\" is not a number");
  return v;
}

Value measurement(const Decimal& hectares) {
  return Value(json::Object{
      {"@type", "MeasurementAsDouble"},
      {"valueAsDouble", Value::number(hectares.text())},
      {"unit", "ha"},
  });
}

}  // namespace

void FieldBoundary::validate() const {
  if (rings.empty()) throw GeoError("boundary " + id + " has no rings");
  const Decimal lat_limit = Decimal::parse("90");
  const Decimal lon_limit = Decimal::parse("180");
  for (const auto& ring : rings) {
    if (ring.size() < 4) throw GeoError("ring has fewer than 4 positions");
    if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat) {
      throw GeoError("ring is not closed");
    }
    for (const auto& p : ring) {
      if (p.lat.abs() > lat_limit || p.lon.abs() > lon_limit) {
        throw GeoError("position out of range: " + p.lon.text() + ", " + p.lat.text());
      }
    }
  }
  if (area_ha.sign() <= 0) throw GeoError("area must be positive");
}

Decimal hectares_to_acres(const Decimal& hectares) {
  if (hectares.sign() < 0) throw std::invalid_argument("negative area: " + hectares.text());
  static const Decimal factor = Decimal::parse(kAcresPerHectare);
  return hectares * factor;
}

double ring_area_ha(const Ring& ring) {
  if (ring.size() < 4) throw GeoError("ring needs at least 4 positions");
  if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat) {
    throw GeoError("ring is not closed");
  }
  std::set<std::pair<std::string, std::string>> distinct;
  for (const auto& p : ring) {
    distinct.emplace(p.lon.coefficient().str() + "e" + std::to_string(p.lon.exponent()),
                     p.lat.coefficient().str() + "e" + std::to_string(p.lat.exponent()));
  }
  if (distinct.size() < 3) throw GeoError("degenerate ring: fewer than 3 distinct positions");

  constexpr double kDeg = std::numbers::pi / 180.0;
  const std::size_t n = ring.size() - 1;  // drop the closing duplicate
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lon_next = ring[(i + 1) % n].lon.to_double() * kDeg;
    const double lon_prev = ring[(i + n - 1) % n].lon.to_double() * kDeg;
    const double lat = ring[i].lat.to_double() * kDeg;
    sum += (lon_next - lon_prev) * std::sin(lat);
  }
  const double area_m2 = std::abs(sum) * kEarthRadiusM * kEarthRadiusM / 2.0;
  return area_m2 / 10000.0;
}

Value boundary_to_provider(const FieldBoundary& b) {
  json::Array rings;
  for (const auto& ring : b.rings) {
    json::Array points;
    points.reserve(ring.size());
    for (const auto& p : ring) {
      points.emplace_back(json::Object{
          {"@type", "Point"},
          {"lat", Value::number(p.lat.text())},
          {"lon", Value::number(p.lon.text())},
      });
    }
    rings.emplace_back(json::Object{{"@type", "Ring"}, {"points", std::move(points)}});
  }

  json::Object boundary{
      {"@type", "Boundary"},
      {"id", b.id},
      {"name", b.name},
      {"sourceType", b.source_type},
      {"createdTime", b.created_time},
      {"modifiedTime", b.modified_time},
      {"area", measurement(b.area_ha)},
      {"workableArea", measurement(b.area_ha)},
      {"multipolygons",
       json::Array{Value(json::Object{{"@type", "Polygon"}, {"rings", std::move(rings)}})}},
  };
  return Value(json::Object{{"values", json::Array{Value(std::move(boundary))}}});
}

std::vector<std::string> version_property_keys(DatasetVersion version) {
  switch (version) {
    case DatasetVersion::V1: return {};
    case DatasetVersion::V2: return {"id"};
    case DatasetVersion::V3: return {"id", "area_ha"};
    case DatasetVersion::V4: return {"id", "area_acres"};
  }
  return {};
}

Value provider_to_geo_reference(const Value& provider, DatasetVersion version) {
  const auto& values = require_array(provider, "values", "boundary list");
  const Value& boundary = values.front();
  if (!boundary.is_object()) throw GeoError("boundary is not an object");

  json::Array polygons;
  for (const auto& polygon : require_array(boundary, "multipolygons", "geometry")) {
    json::Array rings;
    for (const auto& ring : require_array(polygon, "rings", "geometry")) {
      json::Array coords;
      for (const auto& point : require_array(ring, "points", "geometry")) {
        coords.emplace_back(
            json::Array{coordinate_number(point, "lon"), coordinate_number(point, "lat")});
      }
      rings.emplace_back(std::move(coords));
    }
    polygons.emplace_back(std::move(rings));
  }

  const Value* area = boundary.find("area");
  std::optional<Decimal> area_ha;
  if (area != nullptr) {
    const Value* unit = area->find("unit");
    if (unit == nullptr || !unit->is_string() || unit->as_string() != "ha") {
      throw GeoError("area unit is not \"ha\"");
    }
    const Value* amount = area->find("valueAsDouble");
    if (amount == nullptr || !amount->is_number()) throw GeoError("area has no numeric value");
    area_ha = Decimal::parse(amount->as_number().token);
  }

  json::Object properties;
  if (version != DatasetVersion::V1) {
    const Value& id = require(boundary, "id", "boundary id");
    properties.push_back({"id", id});
  }
  if (version == DatasetVersion::V3 || version == DatasetVersion::V4) {
    if (!area_ha) throw GeoError("missing area");
    if (version == DatasetVersion::V3) {
      properties.push_back({"area_ha", Value::number(area_ha->text())});
    } else {
      properties.push_back({"area_acres", Value::number(hectares_to_acres(*area_ha).text())});
    }
  }

  Value geometry = polygons.size() == 1
                       ? Value(json::Object{{"type", "Polygon"}, {"coordinates", std::move(polygons.front())}})
                       : Value(json::Object{{"type", "MultiPolygon"}, {"coordinates", std::move(polygons)}});

  json::Object feature{
      {"type", "Feature"},
      {"properties", std::move(properties)},
      {"geometry", std::move(geometry)},
  };
  return Value(json::Object{
      {"type", "FeatureCollection"},
      {"features", json::Array{Value(std::move(feature))}},
  });
}

}  // namespace interop::geo
