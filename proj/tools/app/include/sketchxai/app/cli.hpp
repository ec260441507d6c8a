#pragma once

#include <iosfwd>

namespace sketchxai::app {

// Entry point of the `sketchxai` command. Results go to `out`; failures print
// one JSON line {"error": {"code", "message"[, "field"]}} to `err` and return
// nonzero (2 for usage errors, 1 otherwise).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sketchxai::app
