// Copyright 2026 The Bitext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "bitext/error.h"
#include "commands.h"

namespace {

int ExitCode(bitext::ErrorKind kind) {
  switch (kind) {
    case bitext::ErrorKind::kUsage:
      return 1;
    case bitext::ErrorKind::kData:
      return 2;
    case bitext::ErrorKind::kNumerical:
      return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Bitext retrieval and mining toolkit"};
  app.set_version_flag("--version",
                       std::string("bitext ") + BITEXT_VERSION + " (" + BITEXT_BUILD_TYPE + ")");
  app.set_config("--config", "", "INI file with one [section] per subcommand; flags override");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::vector<bitext::cli::Command> commands = bitext::cli::RegisterCommands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    for (const CLI::App *sub : app.get_subcommands()) {
      if (!sub->remaining().empty()) {
        std::cerr << "unknown option for " << sub->get_name() << ": " << sub->remaining().front()
                  << "\nRun with --help for more information.\n";
        return 1;
      }
    }
    if (!app.remaining().empty()) {
      std::cerr << "unknown command or option: " << app.remaining().front()
                << "\nRun with --help for more information.\n";
      return 1;
    }
    app.exit(e);
    return 1;
  } catch (const bitext::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode(e.kind());
  }

  for (const bitext::cli::Command &command : commands) {
    if (!command.app->parsed()) continue;
    try {
      command.run();
      return 0;
    } catch (const bitext::Error &e) {
      std::cerr << "error: " << e.what() << '\n';
      return ExitCode(e.kind());
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}
