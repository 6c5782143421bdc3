#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wiretap::cli {

// Exit codes: 0 success / all checks pass, 1 error or failed check,
// 2 infeasible, 3 verification unsupported for the instance.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitUnsupported = 3;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parallelism cap from WIRETAP_OPT_THREADS (default 1).
int thread_cap();

}  // namespace wiretap::cli
