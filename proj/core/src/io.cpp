#include <swapfleet/io.hpp>

#include <charconv>
#include <ostream>

namespace swapfleet::io {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

void state_header(std::ostream& out, int k, Model model, const char* prefix) {
  for (int i = 0; i < k; ++i) out << ',' << prefix << 'y' << i;
  if (model == Model::kTimedUsage) out << ',' << prefix << 'x';
}

// Writes packed coordinates in CSV order (y first, x last).
void packed_row(std::ostream& out, const Vector& z, Model model) {
  const Eigen::Index off = model == Model::kTimedUsage ? 1 : 0;
  for (Eigen::Index i = off; i < z.size(); ++i) out << ',' << format_double(z(i));
  if (off) out << ',' << format_double(z(0));
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& tr, Model model) {
  const int k = tr.states.empty() ? 0 : static_cast<int>(tr.states.front().y.size());
  out << 't';
  state_header(out, k, model, "");
  out << '\n';
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    out << format_double(tr.times[i]);
    packed_row(out, pack(tr.states[i], model), model);
    out << '\n';
  }
}

void write_moments_csv(std::ostream& out, const sim::EnsembleMoments& m, Model model) {
  const int dim = m.mean.empty() ? 0 : static_cast<int>(m.mean.front().size());
  const int k = model == Model::kTimedUsage ? dim - 1 : dim;
  out << 't';
  state_header(out, k, model, "");
  state_header(out, k, model, "var_");
  out << '\n';
  for (std::size_t i = 0; i < m.times.size(); ++i) {
    out << format_double(m.times[i]);
    packed_row(out, m.mean[i], model);
    packed_row(out, m.variance[i], model);
    out << '\n';
  }
}

void write_covariance_csv(std::ostream& out, const fclt::CovarianceTrajectory& cov) {
  const Eigen::Index n = cov.sigmas.empty() ? 0 : cov.sigmas.front().rows();
  out << 't';
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) out << ",sigma_" << i << '_' << j;
  out << '\n';
  for (std::size_t s = 0; s < cov.times.size(); ++s) {
    out << format_double(cov.times[s]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) out << ',' << format_double(cov.sigmas[s](i, j));
    out << '\n';
  }
}

void write_gamma_table_csv(std::ostream& out, const staffing::GammaTable& table) {
  out << "x\\eps";
  for (double e : table.epsilon_values) out << ',' << format_double(e);
  out << '\n';
  for (std::size_t xi = 0; xi < table.x_values.size(); ++xi) {
    out << format_double(table.x_values[xi]);
    for (std::size_t ei = 0; ei < table.epsilon_values.size(); ++ei) {
      const auto& cell = table.at(xi, ei);
      out << ',';
      if (cell.result) out << format_double(cell.result->gamma_star);
    }
    out << '\n';
  }
}

void write_gamma_long_csv(std::ostream& out, const staffing::GammaTable& table) {
  out << "x,eps,gamma_star,gamma_lo,gamma_hi,status\n";
  for (const auto& cell : table.cells) {
    out << format_double(cell.x) << ',' << format_double(cell.epsilon) << ',';
    if (cell.result) {
      out << format_double(cell.result->gamma_star) << ','
          << format_double(cell.result->gamma_lo) << ','
          << format_double(cell.result->gamma_hi) << ",ok\n";
    } else {
      out << ",,,\"" << cell.error << "\"\n";
    }
  }
}

void write_rate_series_csv(std::ostream& out, const estimation::RateStatistics& st) {
  out << "bin_start_epoch,count,rate_per_minute\n";
  for (std::size_t b = 0; b < st.counts.size(); ++b) {
    const double start = static_cast<double>(st.bin_start_epoch) +
                         static_cast<double>(b) * st.bin_width_s;
    out << format_double(start) << ',' << st.counts[b] << ','
        << format_double(st.rate_per_minute[b]) << '\n';
  }
}

}  // namespace swapfleet::io
