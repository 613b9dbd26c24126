#pragma once

namespace xdiff::harness {

/// Exit codes: 0 success, 1 config error, 2 solver failure, 3 invariant violation (verify).
int run_cli(int argc, char** argv);

}  // namespace xdiff::harness
