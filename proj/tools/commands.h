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

#ifndef BITEXT_TOOLS_COMMANDS_H_
#define BITEXT_TOOLS_COMMANDS_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace bitext::cli {

// Options every subcommand accepts.
struct CommonOptions {
  std::string out_dir;
  bool deterministic = false;
};

struct Command {
  CLI::App *app = nullptr;
  std::shared_ptr<CommonOptions> common;
  std::function<void()> run;
};

// Adds every subcommand to `app`.
std::vector<Command> RegisterCommands(CLI::App &app);

}  // namespace bitext::cli

#endif  // BITEXT_TOOLS_COMMANDS_H_
