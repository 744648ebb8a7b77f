#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "swarmstab/graph.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kInfeasibleTarget = 2,
  kNumericalFailure = 3,
  kSearchFailure = 4,
};

/// Everything a command reads from the config file, validated up front.
/// Relative paths in the file resolve against the file's directory.
struct RunConfig {
  DirectedGraph graph{1, {}};
  std::optional<Distribution<double>> target;
  std::optional<Distribution<double>> initial;
  double gain = 10;
  double horizon = 50;
  double dt = 1e-3;
  int agents = 1000;
  std::uint64_t seed = 1;
  std::filesystem::path output = "out";
  double eps = 1e-4;
  double tolerance = 1e-3;
  std::string controller = "feedback";  // or "invariant"
  std::size_t record_stride = 10;
  double stationary_tolerance = 1e-10;
  std::size_t certificate_samples = 10000;
  int budget = 200;
};

/// Parses and validates a config file; throws InvalidArgument.
RunConfig load_config(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace swarmstab::cli
