#include <swapfleet/error.hpp>
#include <swapfleet/estimation.hpp>

#include "csv_parse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace swapfleet::estimation {

double haversine(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double phi1 = lat1 * kRad;
  const double phi2 = lat2 * kRad;
  const double dphi = (lat2 - lat1) * kRad;
  const double dlambda = (lon2 - lon1) * kRad;
  const double s1 = std::sin(0.5 * dphi);
  const double s2 = std::sin(0.5 * dlambda);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

std::string_view rule_name(RejectRule rule) {
  switch (rule) {
    case RejectRule::kVehicleType: return "vehicle-type";
    case RejectRule::kOvernight: return "overnight";
    case RejectRule::kRebalancingNoise: return "rebalancing-noise";
    case RejectRule::kSpeed: return "speed";
    case RejectRule::kRecharge: return "recharge";
  }
  return "unknown";
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void check_sighting(const Sighting& s) {
  if (s.battery < 0 || s.battery > 100) {
    std::ostringstream os;
    os << "sighting of " << s.bike_id << " at " << s.epoch << ": battery " << s.battery
       << " outside [0, 100]";
    throw DataError(os.str());
  }
  if (!(std::abs(s.lat) <= 90.0) || !(std::abs(s.lon) <= 180.0)) {
    std::ostringstream os;
    os << "sighting of " << s.bike_id << " at " << s.epoch << ": invalid coordinates";
    throw DataError(os.str());
  }
}

void check_trip(const TripRecord& t, const ReconstructionConfig& c) {
  const bool ok = t.end_epoch > t.start_epoch && t.end_battery <= t.start_battery &&
                  t.distance >= c.min_distance_m && t.distance / t.duration <= c.max_speed_mps;
  if (!ok) throw DataError("internal: reconstructed trip violates its invariants");
}

}  // namespace

bool spans_off_hours(std::int64_t start_epoch, std::int64_t end_epoch,
                     const ReconstructionConfig& config) {
  constexpr std::int64_t kDay = 86400;
  const std::int64_t a = start_epoch + config.utc_offset_s;
  const std::int64_t b = end_epoch + config.utc_offset_s;
  if (b - a >= kDay) return true;
  const std::int64_t day_a = floor_div(a, kDay);
  const std::int64_t day_b = floor_div(b, kDay);
  const std::int64_t tod_a = a - day_a * kDay;
  const std::int64_t tod_b = b - day_b * kDay;
  const bool full_day_window = config.window_start_s <= 0 && config.window_end_s >= kDay;
  if (day_a != day_b) return !full_day_window;
  return tod_a < config.window_start_s || tod_b >= config.window_end_s;
}

Reconstruction reconstruct_trips(std::span<const Sighting> sightings,
                                 const ReconstructionConfig& config) {
  Reconstruction out;
  for (std::size_t i = 0; i < sightings.size(); ++i) {
    check_sighting(sightings[i]);
    if (i == 0) continue;
    const Sighting& prev = sightings[i - 1];
    const Sighting& cur = sightings[i];
    if (cur.bike_id < prev.bike_id ||
        (cur.bike_id == prev.bike_id && cur.epoch <= prev.epoch)) {
      std::ostringstream os;
      os << "sightings not sorted by (bike_id, epoch) at row " << i;
      throw DataError(os.str());
    }
  }

  for (std::size_t i = 1; i < sightings.size(); ++i) {
    const Sighting& a = sightings[i - 1];
    const Sighting& b = sightings[i];
    if (a.bike_id != b.bike_id || b.epoch - a.epoch <= config.max_poll_gap_s) continue;
    ++out.gaps;

    TripRecord t;
    t.bike_id = a.bike_id;
    t.start_epoch = a.epoch;
    t.end_epoch = b.epoch;
    t.start_battery = a.battery;
    t.end_battery = b.battery;
    t.start_lat = a.lat;
    t.start_lon = a.lon;
    t.end_lat = b.lat;
    t.end_lon = b.lon;
    t.distance = haversine(a.lat, a.lon, b.lat, b.lon);
    t.duration = static_cast<double>(b.epoch - a.epoch);

    const auto reject = [&](RejectRule rule, std::string detail) {
      out.rejections.push_back({t.bike_id, t.start_epoch, t.end_epoch, rule, std::move(detail)});
    };
    std::ostringstream detail;
    if (a.vehicle_type != VehicleType::kScooter || b.vehicle_type != VehicleType::kScooter) {
      reject(RejectRule::kVehicleType, "not a scooter");
    } else if (spans_off_hours(t.start_epoch, t.end_epoch, config)) {
      reject(RejectRule::kOvernight, "gap leaves the operating window");
    } else if (t.distance < config.min_distance_m) {
      detail << "distance " << t.distance << " m";
      reject(RejectRule::kRebalancingNoise, detail.str());
    } else if (t.distance / t.duration > config.max_speed_mps) {
      detail << "speed " << t.distance / t.duration << " m/s";
      reject(RejectRule::kSpeed, detail.str());
    } else if (t.end_battery > t.start_battery) {
      detail << "battery " << t.start_battery << " -> " << t.end_battery;
      reject(RejectRule::kRecharge, detail.str());
    } else {
      check_trip(t, config);
      out.trips.push_back(std::move(t));
    }
  }
  return out;
}

int battery_bucket(int battery, int k_buckets) {
  if (k_buckets < 1) throw ConfigError("K must be >= 1");
  if (battery < 0 || battery > 100) throw DataError("battery outside [0, 100]");
  return std::min(battery * k_buckets / 100, k_buckets - 1);
}

PMatrixEstimate estimate_p_matrix(std::span<const TripRecord> trips, int k_buckets) {
  if (k_buckets < 1) throw ConfigError("K must be >= 1");
  const auto kb = static_cast<std::size_t>(k_buckets);
  PMatrixEstimate est;
  est.p = Matrix::Zero(k_buckets, k_buckets);
  est.row_counts.assign(kb, 0);
  est.transition_counts.assign(kb, std::vector<std::int64_t>(kb, 0));
  for (const auto& t : trips) {
    const auto i = static_cast<std::size_t>(battery_bucket(t.start_battery, k_buckets));
    const auto j = static_cast<std::size_t>(battery_bucket(t.end_battery, k_buckets));
    ++est.transition_counts[i][j];
    ++est.row_counts[i];
  }
  for (std::size_t i = 0; i < kb; ++i) {
    if (est.row_counts[i] == 0) continue;
    for (std::size_t j = 0; j < kb; ++j)
      est.p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(est.transition_counts[i][j]) /
          static_cast<double>(est.row_counts[i]);
  }
  return est;
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

QuantileSummary summarize(const std::vector<double>& v) {
  QuantileSummary s;
  if (v.empty()) return s;
  s.defined = true;
  s.q50 = sample_quantile(v, 0.5);
  s.q80 = sample_quantile(v, 0.8);
  s.q95 = sample_quantile(v, 0.95);
  return s;
}

}  // namespace

RateStatistics rate_statistics(std::span<const TripRecord> trips, double bin_width_s) {
  if (!(bin_width_s > 0.0)) throw ConfigError("bin width must be positive");
  RateStatistics st;
  st.bin_width_s = bin_width_s;
  if (trips.empty()) return st;

  std::int64_t first = trips.front().start_epoch;
  std::int64_t last = first;
  for (const auto& t : trips) {
    first = std::min(first, t.start_epoch);
    last = std::max(last, t.start_epoch);
  }
  const double start = std::floor(static_cast<double>(first) / bin_width_s) * bin_width_s;
  st.bin_start_epoch = static_cast<std::int64_t>(start);
  const auto n_bins =
      static_cast<std::size_t>(std::floor((static_cast<double>(last) - start) / bin_width_s)) + 1;
  st.counts.assign(n_bins, 0);
  for (const auto& t : trips) {
    const auto b = static_cast<std::size_t>(
        std::floor((static_cast<double>(t.start_epoch) - start) / bin_width_s));
    ++st.counts[std::min(b, n_bins - 1)];
  }
  const double minutes = bin_width_s / 60.0;
  st.rate_per_minute.reserve(n_bins);
  for (auto c : st.counts) st.rate_per_minute.push_back(static_cast<double>(c) / minutes);

  std::vector<double> dur, dist, drop;
  for (const auto& t : trips) {
    dur.push_back(t.duration);
    dist.push_back(t.distance);
    drop.push_back(static_cast<double>(t.start_battery - t.end_battery));
  }
  st.duration = summarize(dur);
  st.distance = summarize(dist);
  st.battery_drop = summarize(drop);
  return st;
}

double l1_objective(std::span<const double> xs, std::span<const double> ys, double intercept,
                    double slope) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += std::abs(ys[i] - intercept - slope * xs[i]);
  return s;
}

namespace {

// Weighted least squares; w empty means unit weights.
LineFit weighted_fit(std::span<const double> xs, std::span<const double> ys,
                     const std::vector<double>& w, bool with_intercept) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * xs[i];
    sy += wi * ys[i];
    sxx += wi * xs[i] * xs[i];
    sxy += wi * xs[i] * ys[i];
  }
  LineFit fit;
  if (with_intercept) {
    const double mx = sx / sw;
    const double my = sy / sw;
    const double vxx = sxx - sw * mx * mx;
    const double vxy = sxy - sw * mx * my;
    if (!(vxx > 0.0)) throw DataError("fit_line: all x values are identical");
    fit.slope = vxy / vxx;
    fit.intercept = my - fit.slope * mx;
  } else {
    if (!(sxx > 0.0)) throw DataError("fit_line: all x values are zero");
    fit.slope = sxy / sxx;
  }
  return fit;
}

}  // namespace

LineFit fit_line(std::span<const double> xs, std::span<const double> ys, Norm norm,
                 bool with_intercept) {
  if (xs.size() != ys.size()) throw DataError("fit_line: xs and ys differ in length");
  if (xs.size() < 2) throw DataError("fit_line: need at least 2 points");
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  if (*mn == *mx) throw DataError("fit_line: all x values are identical");

  LineFit fit = weighted_fit(xs, ys, {}, with_intercept);
  if (norm == Norm::kL2) return fit;

  constexpr double kWeightFloor = 1e-8;
  constexpr double kParamTol = 1e-10;
  constexpr int kMaxIterations = 200;
  std::vector<double> w(xs.size());
  for (int it = 1; it <= kMaxIterations; ++it) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = std::abs(ys[i] - fit.intercept - fit.slope * xs[i]);
      w[i] = 1.0 / std::max(r, kWeightFloor);
    }
    LineFit next = weighted_fit(xs, ys, w, with_intercept);
    next.iterations = it;
    const double change =
        std::max(std::abs(next.intercept - fit.intercept), std::abs(next.slope - fit.slope));
    fit = next;
    if (change < kParamTol) break;
  }
  return fit;
}

namespace {

struct Header {
  std::map<std::string, std::size_t> index;

  std::size_t require(const std::string& name) const {
    const auto it = index.find(name);
    if (it == index.end()) throw DataError("CSV header is missing column '" + name + "'");
    return it->second;
  }
};

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty (header required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  Header h;
  const auto cols = detail::split_csv(line);
  for (std::size_t i = 0; i < cols.size(); ++i) h.index[cols[i]] = i;
  return h;
}

template <class T>
T parse_number(const std::string& s, std::size_t row, const char* col) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    std::ostringstream os;
    os << "row " << row << ": cannot parse " << col << " = '" << s << "'";
    throw DataError(os.str());
  }
  return v;
}

bool parse_bool(const std::string& s, std::size_t row, const char* col) {
  if (s == "1" || s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "0" || s == "false" || s == "False" || s == "FALSE") return false;
  std::ostringstream os;
  os << "row " << row << ": cannot parse boolean " << col << " = '" << s << "'";
  throw DataError(os.str());
}

}  // namespace

std::vector<Sighting> read_sightings_csv(std::istream& in) {
  const Header h = read_header(in);
  const std::size_t c_id = h.require("bike_id");
  const std::size_t c_dis = h.require("is_disabled");
  const std::size_t c_res = h.require("is_reserved");
  const std::size_t c_bat = h.require("battery");
  const std::size_t c_type = h.require("type");
  const std::size_t c_lat = h.require("lat");
  const std::size_t c_lon = h.require("lon");
  const std::size_t c_epoch = h.require("epoch");
  const std::size_t width = h.index.size();

  std::vector<Sighting> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    if (f.size() < width) {
      std::ostringstream os;
      os << "row " << row << ": expected " << width << " fields, got " << f.size();
      throw DataError(os.str());
    }
    Sighting s;
    s.bike_id = f[c_id];
    s.is_disabled = parse_bool(f[c_dis], row, "is_disabled");
    s.is_reserved = parse_bool(f[c_res], row, "is_reserved");
    s.battery = parse_number<int>(f[c_bat], row, "battery");
    const std::string& type = f[c_type];
    if (type == "scooter") s.vehicle_type = VehicleType::kScooter;
    else if (type == "bike") s.vehicle_type = VehicleType::kBike;
    else throw DataError("row " + std::to_string(row) + ": unknown vehicle type '" + type + "'");
    s.lat = parse_number<double>(f[c_lat], row, "lat");
    s.lon = parse_number<double>(f[c_lon], row, "lon");
    s.epoch = parse_number<std::int64_t>(f[c_epoch], row, "epoch");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TripRecord> read_trips_csv(std::istream& in) {
  const Header h = read_header(in);
  const std::size_t c_id = h.require("bike_id");
  const std::size_t c_se = h.require("start_epoch");
  const std::size_t c_ee = h.require("end_epoch");
  const std::size_t c_sb = h.require("start_battery");
  const std::size_t c_eb = h.require("end_battery");
  const std::size_t c_sla = h.require("start_lat");
  const std::size_t c_slo = h.require("start_lon");
  const std::size_t c_ela = h.require("end_lat");
  const std::size_t c_elo = h.require("end_lon");
  const std::size_t width = h.index.size();

  std::vector<TripRecord> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    if (f.size() < width) {
      std::ostringstream os;
      os << "row " << row << ": expected " << width << " fields, got " << f.size();
      throw DataError(os.str());
    }
    TripRecord t;
    t.bike_id = f[c_id];
    t.start_epoch = parse_number<std::int64_t>(f[c_se], row, "start_epoch");
    t.end_epoch = parse_number<std::int64_t>(f[c_ee], row, "end_epoch");
    t.start_battery = parse_number<int>(f[c_sb], row, "start_battery");
    t.end_battery = parse_number<int>(f[c_eb], row, "end_battery");
    t.start_lat = parse_number<double>(f[c_sla], row, "start_lat");
    t.start_lon = parse_number<double>(f[c_slo], row, "start_lon");
    t.end_lat = parse_number<double>(f[c_ela], row, "end_lat");
    t.end_lon = parse_number<double>(f[c_elo], row, "end_lon");
    if (t.end_epoch <= t.start_epoch)
      throw DataError("row " + std::to_string(row) + ": end_epoch must exceed start_epoch");
    if (t.start_battery < 0 || t.start_battery > 100 || t.end_battery < 0 || t.end_battery > 100)
      throw DataError("row " + std::to_string(row) + ": battery outside [0, 100]");
    t.distance = haversine(t.start_lat, t.start_lon, t.end_lat, t.end_lon);
    t.duration = static_cast<double>(t.end_epoch - t.start_epoch);
    out.push_back(std::move(t));
  }
  return out;
}

void write_trips_csv(std::ostream& out, std::span<const TripRecord> trips) {
  out << "bike_id,start_epoch,end_epoch,start_battery,end_battery,start_lat,start_lon,end_lat,"
         "end_lon,distance,duration\n";
  const auto old = out.precision(10);
  for (const auto& t : trips) {
    out << t.bike_id << ',' << t.start_epoch << ',' << t.end_epoch << ',' << t.start_battery
        << ',' << t.end_battery << ',' << t.start_lat << ',' << t.start_lon << ',' << t.end_lat
        << ',' << t.end_lon << ',' << t.distance << ',' << t.duration << '\n';
  }
  out.precision(old);
}

}  // namespace swapfleet::estimation
