#include "cli/commands.hpp"

#include <swapfleet/error.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

int fail(const char* kind, int code, const std::string& message) {
  const swapfleet::cli::Json line{{"error", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << line.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace swapfleet;
  CLI::App app{"swapfleet: battery-swap scooter fleet models"};
  cli::RunOptions opts;
  cli::add_commands(app, opts);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("config", 2, e.what());
  }
  try {
    cli::run(opts);
  } catch (const ConfigError& e) {
    return fail("config", 2, e.what());
  } catch (const NumericError& e) {
    return fail("numeric", 3, e.what());
  } catch (const DataError& e) {
    return fail("data", 4, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return 0;
}
