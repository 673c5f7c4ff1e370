#pragma once

namespace parab::cli {

/// Exit codes: 0 pass, 1 config/schema error, 2 contract violation (including
/// failed checks), 3 solver failure.
int run(int argc, const char* const* argv);

}  // namespace parab::cli
