/* Copyright 2026 The balpack Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "balpack/jsonl.hpp"

#include "balpack/error.hpp"

namespace balpack::jsonl {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot open: " + path.string());
  return in;
}

void for_each(const std::filesystem::path& path,
              const std::function<void(const Json&, std::size_t)>& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error("malformed_json",
                  path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    fn(j, line_no);
  }
}

void write_line(std::ostream& out, const Json& j) {
  out << j.dump() << '\n';
}

std::string get_string(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error("malformed_record",
                "line " + std::to_string(line) + ": field \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

long long get_int(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    throw Error("malformed_record",
                "line " + std::to_string(line) + ": field \"" + key + "\" must be an integer");
  }
  return it->get<long long>();
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

Json read_json_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("malformed_json", path.string() + ": invalid JSON");
  return j;
}

}  // namespace balpack::jsonl
