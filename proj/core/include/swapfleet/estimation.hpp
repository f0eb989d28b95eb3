#pragma once

#include <swapfleet/params.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swapfleet::estimation {

inline constexpr double kEarthRadiusMeters = 6371000.0;
/// 25 mph in meters per second.
inline constexpr double kMaxScooterSpeed = 25.0 * 1609.344 / 3600.0;
inline constexpr double kMinTripDistance = 50.0;

enum class VehicleType { kBike, kScooter };

/// One vehicle in one GBFS free-bike-status snapshot.
struct Sighting {
  std::string bike_id;
  int battery = 0;  // percent, 0..100
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t epoch = 0;
  VehicleType vehicle_type = VehicleType::kScooter;
  bool is_disabled = false;
  bool is_reserved = false;
};

struct TripRecord {
  std::string bike_id;
  std::int64_t start_epoch = 0;
  std::int64_t end_epoch = 0;
  int start_battery = 0;
  int end_battery = 0;
  double start_lat = 0.0;
  double start_lon = 0.0;
  double end_lat = 0.0;
  double end_lon = 0.0;
  double distance = 0.0;  // meters
  double duration = 0.0;  // seconds
};

/// Great-circle distance in meters between two points given in degrees.
double haversine(double lat1, double lon1, double lat2, double lon2);

struct ReconstructionConfig {
  // Consecutive sightings further apart than this are a disappearance.
  std::int64_t max_poll_gap_s = 90;
  // Operating window in local seconds-of-day, [start, end).
  std::int64_t window_start_s = 6 * 3600;
  std::int64_t window_end_s = 24 * 3600;
  std::int64_t utc_offset_s = 0;
  double min_distance_m = kMinTripDistance;
  double max_speed_mps = kMaxScooterSpeed;
};

enum class RejectRule { kVehicleType, kOvernight, kRebalancingNoise, kSpeed, kRecharge };

std::string_view rule_name(RejectRule rule);

struct Rejection {
  std::string bike_id;
  std::int64_t start_epoch = 0;
  std::int64_t end_epoch = 0;
  RejectRule rule = RejectRule::kVehicleType;
  std::string detail;
};

struct Reconstruction {
  std::vector<TripRecord> trips;
  std::vector<Rejection> rejections;
  std::size_t gaps = 0;
};

/// True if [start, end] contains any instant outside the operating window.
bool spans_off_hours(std::int64_t start_epoch, std::int64_t end_epoch,
                     const ReconstructionConfig& config);

/// Turns each disappearance of a vehicle into a candidate trip and filters
/// it. Rules are applied in order: vehicle type, overnight, distance below
/// min_distance_m, average speed above max_speed_mps, battery increase.
/// Input must be sorted by (bike_id, epoch); throws DataError otherwise.
Reconstruction reconstruct_trips(std::span<const Sighting> sightings,
                                 const ReconstructionConfig& config = {});

/// Bucket of a battery percentage: floor(battery * K / 100), with 100%
/// clamped into bucket K-1.
int battery_bucket(int battery, int k_buckets);

struct PMatrixEstimate {
  Matrix p;
  std::vector<std::int64_t> row_counts;
  std::vector<std::vector<std::int64_t>> transition_counts;
};

PMatrixEstimate estimate_p_matrix(std::span<const TripRecord> trips, int k_buckets);

struct QuantileSummary {
  bool defined = false;
  double q50 = 0.0;
  double q80 = 0.0;
  double q95 = 0.0;
};

/// Linear-interpolation sample quantile (the usual "type 7" definition) of
/// unsorted data; q in [0, 1].
double sample_quantile(std::vector<double> values, double q);

struct RateStatistics {
  std::int64_t bin_start_epoch = 0;
  double bin_width_s = 0.0;
  std::vector<std::int64_t> counts;
  std::vector<double> rate_per_minute;
  QuantileSummary duration;      // seconds
  QuantileSummary distance;      // meters
  QuantileSummary battery_drop;  // percentage points
};

RateStatistics rate_statistics(std::span<const TripRecord> trips, double bin_width_s);

enum class Norm { kL1, kL2 };

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  int iterations = 0;
};

/// Least-squares (L2) or least-absolute-deviations (L1, by iteratively
/// reweighted least squares) line fit. Without an intercept the line is
/// forced through the origin.
LineFit fit_line(std::span<const double> xs, std::span<const double> ys, Norm norm,
                 bool with_intercept);

/// sum_i |y_i - a - b x_i|.
double l1_objective(std::span<const double> xs, std::span<const double> ys, double intercept,
                    double slope);

/// CSV readers. Sightings need a header with at least bike_id, is_disabled,
/// is_reserved, battery, type, lat, lon, epoch (other columns are ignored).
/// Trips use bike_id,start_epoch,end_epoch,start_battery,end_battery,
/// start_lat,start_lon,end_lat,end_lon; distance and duration are derived.
std::vector<Sighting> read_sightings_csv(std::istream& in);
std::vector<TripRecord> read_trips_csv(std::istream& in);
void write_trips_csv(std::ostream& out, std::span<const TripRecord> trips);

}  // namespace swapfleet::estimation
