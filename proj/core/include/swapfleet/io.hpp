#pragma once

#include <swapfleet/estimation.hpp>
#include <swapfleet/fclt.hpp>
#include <swapfleet/simulator.hpp>
#include <swapfleet/staffing.hpp>
#include <swapfleet/state.hpp>

#include <iosfwd>
#include <string>

namespace swapfleet::io {

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

/// `t,y0,...,y{K-1}[,x]`.
void write_trajectory_csv(std::ostream& out, const Trajectory& tr, Model model);

/// Trajectory columns followed by `var_y0,...[,var_x]`.
void write_moments_csv(std::ostream& out, const sim::EnsembleMoments& m, Model model);

/// `t,sigma_{i}_{j}` for i <= j. Index names follow packed coordinates
/// (for the timed model index 0 is x).
void write_covariance_csv(std::ostream& out, const fclt::CovarianceTrajectory& cov);

/// Wide layout: first column x, one column per epsilon; failed cells empty.
void write_gamma_table_csv(std::ostream& out, const staffing::GammaTable& table);

/// Long layout: `x,eps,gamma_star,gamma_lo,gamma_hi,status`.
void write_gamma_long_csv(std::ostream& out, const staffing::GammaTable& table);

/// `bin_start_epoch,count,rate_per_minute`.
void write_rate_series_csv(std::ostream& out, const estimation::RateStatistics& st);

}  // namespace swapfleet::io
