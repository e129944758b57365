// Copyright 2026 The SSV Authors.
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

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "common.h"

namespace ssv::cli {

struct StageCommand {
  CLI::App* app;
  std::function<void()> action;
};

std::vector<StageCommand> register_stages(CLI::App& app, Globals& g);

// The end-to-end driver. Each step is one subcommand invocation; handoff
// between steps is through files under `out_dir`.
struct PipelineOptions {
  std::string out_dir;
  bool dry_run = false;
};
StageCommand register_pipeline(CLI::App& app, Globals& g, std::ostream& err);

}  // namespace ssv::cli
