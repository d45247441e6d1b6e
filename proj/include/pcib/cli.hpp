#pragma once

#include <string>

#include "pcib/signals.hpp"

namespace pcib::app {

/// Entry point for the `pcib` command line tool.
/// Exit codes: 0 success, 1 usage error, 2 partial data failure,
/// 3 backend failure.
int run_cli(int argc, const char* const* argv);

/// Signal configuration from a JSON file; absent keys keep defaults.
signals::SignalConfig load_signal_config(const std::string& path);

}  // namespace pcib::app
