#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gfflab/grid.hpp"

namespace gfflab::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

struct Options {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  /// 0: GFFLAB_THREADS, then machine parallelism.
  unsigned threads = 0;
  std::string output;
  std::string format = "both";
};

/// One line of a distance batch file: "u_i u_j v_i v_j [maskid]".
struct Query {
  Vertex u;
  Vertex v;
  std::optional<std::string> mask;
};

/// Blank lines and lines starting with '#' are skipped. ParseError names the
/// offending line.
std::vector<Query> parse_batch(std::string_view text);

/// Shortest round-trip decimal form; "inf" for infinity.
std::string format_number(double x);

/// Runs one experiment and writes its artifacts plus manifest.json into the
/// output directory. Errors are reported as one JSON object on `err` and
/// mapped to exit codes 2 (validation) and 3 (numerical / geometry).
int run(const Options& options, std::ostream& out, std::ostream& err);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace gfflab::cli
