#pragma once

#include <ostream>

namespace reflectcast::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;
inline constexpr int kUsageError = 2;

// Parses argv and runs one subcommand: ingest, summarize, script, synth,
// serve, simulate or analyze. Results go to `out` (or --out files), messages
// and usage help to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Applies LOG_LEVEL (trace, debug, info, warn, error, off) to a stderr logger.
// Defaults to warn.
void configure_logging();

}  // namespace reflectcast::cli
