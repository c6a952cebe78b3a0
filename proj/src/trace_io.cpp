#include "avmig/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <string_view>

#include "avmig/errors.hpp"

namespace avmig {

namespace {

constexpr double kEarthRadius = 6371008.8;  // m, mean radius
constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_field(std::string_view field, const char* name, std::size_t line) {
  field = trim(field);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(std::string("invalid ") + name + " '" + std::string(field) + "'", line);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw ParseError(std::string("non-finite ") + name, line);
    }
  }
  return value;
}

}  // namespace

Position GeoReference::project(double lat_deg, double lon_deg) const {
  const double x = kEarthRadius * std::cos(lat * kDegToRad) * (lon_deg - lon) * kDegToRad;
  const double y = kEarthRadius * (lat_deg - lat) * kDegToRad;
  return Position(x, y);
}

Eigen::Vector2d GeoReference::unproject(const Position& p) const {
  const double lat_deg = lat + p.y() / (kEarthRadius * kDegToRad);
  const double lon_deg = lon + p.x() / (kEarthRadius * std::cos(lat * kDegToRad) * kDegToRad);
  return Eigen::Vector2d(lat_deg, lon_deg);
}

std::vector<MobilityTrace> load_traces(std::istream& in,
                                       const GeoReference& ref) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++line_no;
  std::string_view header = trim(line);
  if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
  if (header != "vehicle_id,timestamp,lat,lon") {
    throw ParseError("expected header 'vehicle_id,timestamp,lat,lon'", line_no);
  }

  std::map<int, MobilityTrace> by_vehicle;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;
    std::string_view fields[4];
    std::size_t count = 0;
    while (true) {
      const std::size_t comma = row.find(',');
      if (count == 4) throw ParseError("too many fields", line_no);
      fields[count++] = row.substr(0, comma);
      if (comma == std::string_view::npos) break;
      row.remove_prefix(comma + 1);
    }
    if (count != 4) throw ParseError("expected 4 fields", line_no);

    const int id = parse_field<int>(fields[0], "vehicle_id", line_no);
    const double ts = parse_field<double>(fields[1], "timestamp", line_no);
    const double lat = parse_field<double>(fields[2], "lat", line_no);
    const double lon = parse_field<double>(fields[3], "lon", line_no);

    MobilityTrace& trace = by_vehicle[id];
    trace.vehicle_id = id;
    if (!trace.samples.empty() && !(ts > trace.samples.back().timestamp)) {
      throw ValidationError("vehicle " + std::to_string(id) +
                            ": timestamps not strictly increasing at line " +
                            std::to_string(line_no));
    }
    trace.samples.push_back({ts, ref.project(lat, lon)});
  }

  std::vector<MobilityTrace> out;
  out.reserve(by_vehicle.size());
  for (auto& [id, trace] : by_vehicle) out.push_back(std::move(trace));
  return out;
}

void write_traces(std::ostream& out, std::span<const MobilityTrace> traces,
                  const GeoReference& ref) {
  out << "vehicle_id,timestamp,lat,lon\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const MobilityTrace& t : traces) {
    for (const TraceSample& s : t.samples) {
      const Eigen::Vector2d ll = ref.unproject(s.position);
      out << t.vehicle_id << ',' << s.timestamp << ',' << ll.x() << ',' << ll.y() << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace avmig
