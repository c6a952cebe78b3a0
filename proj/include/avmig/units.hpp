#ifndef AVMIG_UNITS_HPP_
#define AVMIG_UNITS_HPP_

// Internal units: bits, seconds, cycles, Hz, watts, meters.
// Decimal prefixes throughout (1 MB = 1e6 bytes).
namespace avmig::units {

inline constexpr double kBitsPerByte = 8.0;
inline constexpr double kMegabyte = 1e6 * kBitsPerByte;  // in bits
inline constexpr double kMbps = 1e6;
inline constexpr double kGbps = 1e9;
inline constexpr double kMHz = 1e6;
inline constexpr double kGHz = 1e9;
inline constexpr double kGcycles = 1e9;
// Gcycles/MB expressed as cycles per bit.
inline constexpr double kGcyclesPerMegabyte = kGcycles / kMegabyte;

inline constexpr double megabytes(double mb) { return mb * kMegabyte; }
inline constexpr double mbps(double v) { return v * kMbps; }
inline constexpr double ghz(double v) { return v * kGHz; }
inline constexpr double gcycles(double v) { return v * kGcycles; }
inline constexpr double gcycles_per_mb(double v) {
  return v * kGcyclesPerMegabyte;
}

}  // namespace avmig::units

#endif  // AVMIG_UNITS_HPP_
