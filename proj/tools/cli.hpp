#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace thz::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataMismatch = 2, kVerifyFailed = 3 };

/// Runs one thz_tomo command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string measured;
    std::string threshold;
};

/// Names accepted by `verify --only`.
std::vector<std::string> verify_check_names();

/// Runs the named built-in checks (all of them when `only` is empty).
std::vector<CheckResult> run_verify(const std::vector<std::string>& only);

}  // namespace thz::cli
