#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parcon/control.hpp"

namespace parcon {

struct RunConfig {
  std::string command;
  std::string problem = "lshape-measure";
  int n = 8;
  std::vector<int> levels{4, 8, 16, 32};
  /// Time steps; zero selects the k <= h^2 rule.
  int steps = 0;
  double alpha = 1.0;
  Bounds bounds;
  double step = 0.0;
  double tol = 1e-8;
  int max_iter = 500;
  std::string out;
  unsigned threads = 1;

  void validate() const;
  OptimizerConfig optimizer() const;
};

/// key=value lines; '#' starts a comment. Unknown keys and malformed values
/// raise ParseError, inconsistent values ValidationError.
RunConfig parse_config(std::string_view text);

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2 };

/// Runs one of mesh-info, solve, study, gradcheck. `args` excludes the
/// program name.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace parcon
