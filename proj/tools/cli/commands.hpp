#pragma once

#include "cli/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace swapfleet::cli {

inline constexpr std::uint64_t kDefaultSeed = 20191001;

struct RunOptions {
  std::string command;
  std::string config_path;  // empty: built-in reference config
  std::string out_dir = "swapfleet-out";
  std::uint64_t seed = kDefaultSeed;
  std::size_t paths = 100;
  double horizon = 20.0;
  double step = 0.1;  // output grid spacing
  std::vector<double> x;
  std::vector<double> eps;
  int k = 5;
  std::string trips;
  std::string sightings;
  double bin_s = 3600.0;
  double utc_offset_h = 0.0;
  unsigned threads = 0;
  std::string manifest;  // rerun only
};

// Registers every subcommand on `app`, all writing into `opts`.
void add_commands(CLI::App& app, RunOptions& opts);

// Runs opts.command. Throws swapfleet::Error subclasses on failure.
void run(const RunOptions& opts);

}  // namespace swapfleet::cli
