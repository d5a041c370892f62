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

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

namespace balpack::jsonl {

using Json = nlohmann::json;

// Calls fn(object, line_number) for every non-blank line. Parse failures and
// non-object lines raise Error("malformed_json") with the 1-based line number.
void for_each(const std::filesystem::path& path,
              const std::function<void(const Json&, std::size_t)>& fn);

std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

// Writes `j` compactly followed by '\n'.
void write_line(std::ostream& out, const Json& j);

// Typed field access with errors naming the line and key.
std::string get_string(const Json& j, const char* key, std::size_t line);
long long get_int(const Json& j, const char* key, std::size_t line);

void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

}  // namespace balpack::jsonl
