#ifndef AVMIG_TRACE_IO_HPP_
#define AVMIG_TRACE_IO_HPP_

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "avmig/world.hpp"

namespace avmig {

// Equirectangular projection around a reference point: x grows east,
// y grows north, both in meters.
struct GeoReference {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  Position project(double lat_deg, double lon_deg) const;
  // Inverse of project(); returns (lat, lon) in degrees.
  Eigen::Vector2d unproject(const Position& p) const;
};

// Reads the `vehicle_id,timestamp,lat,lon` CSV. Rows of different vehicles
// may interleave; within one vehicle timestamps must strictly increase.
// Returns one trace per vehicle id in ascending id order.
// Throws ParseError (with the 1-based line) or ValidationError.
std::vector<MobilityTrace> load_traces(std::istream& in,
                                       const GeoReference& ref);

// Writes traces in the same CSV format with round-trip precision.
void write_traces(std::ostream& out, std::span<const MobilityTrace> traces,
                  const GeoReference& ref);

}  // namespace avmig

#endif  // AVMIG_TRACE_IO_HPP_
