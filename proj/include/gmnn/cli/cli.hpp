#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace gmnn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

/// Entry point of the `gmnn` tool. Subcommands:
///   run   --task T --method M --dataset FILE [--edges FILE] [--seeds N | --seed-list S...]
///         [--parallel N] [--out DIR] [--name STEM] [--config FILE] [--<dotted.option> VALUE]...
///   table REPORT...
/// The output directory defaults to $GMNN_OUTPUT_DIR, then the working directory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// One row per method, one column per dataset, means in percent to one decimal.
/// Missing combinations are blank.
std::string format_table(const std::vector<nlohmann::json>& reports);

}  // namespace gmnn::cli
