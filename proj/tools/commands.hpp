#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace osca::cli {

inline const std::vector<std::string> kCommands = {"annotate", "synth", "split",  "train",
                                                   "eval",     "sweep", "stats", "compose-check"};

enum ExitCode : int {
    kOk = 0,
    kOther = 1,
    kConfig = 2,
    kValidation = 3,
    kIo = 4,
    kDomain = 5,
    kShape = 6,
    kTraining = 7,
};

int exit_code_for(const std::string& category) noexcept;

// Config file first, then `overrides` (flags win). Artifacts land in the
// resolved `out` directory next to config.resolved. Errors are reported on
// `err` and mapped to an exit code.
int run(const std::string& command, const KeyValues& overrides, const std::optional<std::filesystem::path>& config_path,
        std::ostream& log, std::ostream& err);

}  // namespace osca::cli
