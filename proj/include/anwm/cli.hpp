#pragma once

namespace anwm {

/// Runs one subcommand. Returns 0 on success, 1 on a domain error and 2 on
/// a usage error.
int dispatch(int argc, char** argv);

}  // namespace anwm
