#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ofulq/ofu.hpp"
#include "ofulq/simulate.hpp"
#include "ofulq/verify.hpp"

namespace ofulq {

enum ExitCode : int {
  exit_success = 0,
  exit_usage = 1,
  exit_model = 2,
  exit_runtime = 3,
  exit_verdict = 4,
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// `#` comment lines (one per entry of `comments`), then the header
/// t,episode,cost,cum_cost,regret and one row per step starting at t = 1.
std::string run_csv(const RunRecord& record, const std::vector<std::pair<std::string, std::string>>& comments);

nlohmann::json episodes_json(const OfuRun& run);
nlohmann::json report_json(const BoundReport& report);

/// Entry point of the ofulq tool. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ofulq
