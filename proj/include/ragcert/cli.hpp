#pragma once

namespace ragcert {

// Parses argv and runs one subcommand; returns the process exit status.
int run_cli(int argc, const char* const* argv);

}  // namespace ragcert
