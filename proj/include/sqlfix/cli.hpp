// Copyright 2026 The sqlfix Authors
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
//
// Command line entry point. Every run writes a manifest and a report
// beside its outputs; report payloads are deterministic for fixed inputs
// and scripted backends, with timestamps confined to the meta block.

#ifndef SQLFIX_CLI_HPP_
#define SQLFIX_CLI_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace sqlfix {

struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::string> dataset_paths;
  std::vector<std::string> backend_ids;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string isolation;  // empty: dialect default
};

nlohmann::json manifest_to_json(const RunManifest& m);

// {"meta": {...timestamps, timing, manifest...}, "payload": <payload>}.
// Byte-for-byte reproducibility is promised for payload only.
nlohmann::json make_report(const RunManifest& manifest,
                           nlohmann::json payload, std::int64_t elapsed_ms);

// Exit codes: 0 completed, 1 usage error, 2 environment or setup failure.
int cli_main(int argc, const char* const* argv);

}  // namespace sqlfix

#endif  // SQLFIX_CLI_HPP_
