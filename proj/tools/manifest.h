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

#ifndef BITEXT_TOOLS_MANIFEST_H_
#define BITEXT_TOOLS_MANIFEST_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace bitext::cli {

// Hex SHA-256 of a file, or of every regular file below a directory
// (relative names and contents, in sorted order).
std::string Sha256Path(const std::string &path);

// Writes through a sibling temporary file and renames it into place.
void AtomicWrite(const std::string &path,
                 const std::function<void(std::ostream &)> &writer,
                 bool binary = false);

// Same for a directory produced by `writer(tmp_dir)`.
void AtomicWriteDir(const std::string &path,
                    const std::function<void(const std::string &)> &writer);

// Resolves `name` under `out_dir`. Absolute names and names that climb out
// of the directory are usage errors.
std::string ResolveOutput(const std::string &out_dir, const std::string &name);

// Provenance record written next to every artifact of one invocation.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::ordered_json config, uint64_t seed);

  void AddInput(const std::string &path);
  void AddOutput(const std::string &path);
  const std::vector<std::string> &outputs() const { return outputs_; }

  nlohmann::ordered_json ToJson() const;
  // Writes "<output>.manifest.json" for each recorded output.
  void WriteAll() const;

 private:
  std::string command_;
  nlohmann::ordered_json config_;
  uint64_t seed_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace bitext::cli

#endif  // BITEXT_TOOLS_MANIFEST_H_
