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

#include "manifest.h"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "bitext/error.h"

namespace bitext::cli {
namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw DataError("cannot initialize SHA-256");
    }
  }

  void Update(const void *data, size_t size) {
    EVP_DigestUpdate(ctx_.get(), data, size);
  }

  void UpdateFile(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    char buffer[1 << 16];
    while (in) {
      in.read(buffer, sizeof(buffer));
      Update(buffer, static_cast<size_t>(in.gcount()));
    }
  }

  std::string Hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest, &size);
    std::ostringstream out;
    for (unsigned int i = 0; i < size; ++i) {
      out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string TempSibling(const std::string &path) {
  static int counter = 0;
  return path + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
}

}  // namespace

std::string Sha256Path(const std::string &path) {
  Sha256 sha;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto &entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path &f : files) {
      const std::string name = fs::relative(f, path).generic_string();
      sha.Update(name.data(), name.size() + 1);
      sha.UpdateFile(f);
    }
  } else {
    sha.UpdateFile(path);
  }
  return sha.Hex();
}

void AtomicWrite(const std::string &path,
                 const std::function<void(std::ostream &)> &writer, bool binary) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = TempSibling(path);
  try {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw DataError("cannot write " + tmp);
    writer(out);
    out.flush();
    if (!out) throw DataError("failed writing " + tmp);
    out.close();
    fs::rename(tmp, target);
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
}

void AtomicWriteDir(const std::string &path,
                    const std::function<void(const std::string &)> &writer) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = TempSibling(path);
  try {
    fs::create_directories(tmp);
    writer(tmp);
    fs::remove_all(target);
    fs::rename(tmp, target);
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(tmp, ignored);
    throw;
  }
}

std::string ResolveOutput(const std::string &out_dir, const std::string &name) {
  if (name.empty()) throw UsageError("empty output name");
  const fs::path rel(name);
  if (rel.is_absolute()) {
    throw UsageError("output '" + name + "' must be relative to --out-dir");
  }
  const fs::path normal = rel.lexically_normal();
  if (normal.empty() || *normal.begin() == "..") {
    throw UsageError("output '" + name + "' escapes the output directory");
  }
  return (fs::path(out_dir) / normal).string();
}

RunManifest::RunManifest(std::string command, nlohmann::ordered_json config, uint64_t seed)
    : command_(std::move(command)),
      config_(std::move(config)),
      seed_(seed),
      start_(std::chrono::steady_clock::now()) {}

void RunManifest::AddInput(const std::string &path) {
  if (!fs::exists(path)) throw DataError("input not found: " + path);
  inputs_[path] = Sha256Path(path);
}

void RunManifest::AddOutput(const std::string &path) { outputs_.push_back(path); }

nlohmann::ordered_json RunManifest::ToJson() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config"] = config_;
  j["seed"] = seed_;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto &[path, digest] : inputs_) j["inputs"][path] = "sha256:" + digest;
  j["outputs"] = outputs_;
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
  j["duration_seconds"] = elapsed.count();
  return j;
}

void RunManifest::WriteAll() const {
  const std::string text = ToJson().dump(2) + "\n";
  for (const std::string &out : outputs_) {
    AtomicWrite(out + ".manifest.json", [&](std::ostream &o) { o << text; });
  }
}

}  // namespace bitext::cli
