#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace subot::cli {

/// Runs one command line (program name excluded) and returns the exit code.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SUBOT_THREADS when it holds a positive integer, otherwise the hardware
/// concurrency (at least 1).
std::size_t worker_limit();

/// Calls task(i) for every i in [0, count) on at most `workers` threads.
/// Tasks must handle their own errors.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task);

}  // namespace subot::cli
