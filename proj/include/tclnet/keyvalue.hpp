/*
 * Copyright 2026 The TCLNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TCLNET_KEYVALUE_HPP_
#define TCLNET_KEYVALUE_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace tclnet {

/// `key=value` lines; blank lines and `#` comments are skipped. Later keys
/// overwrite earlier ones. Malformed lines raise ConfigError.
std::map<std::string, std::string> parse_key_values(const std::string& text);

std::size_t parse_size(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value);

std::string join_sizes(const std::vector<std::size_t>& values);
/// Shortest text that round-trips the double exactly.
std::string format_double(double value);

}  // namespace tclnet

#endif  // TCLNET_KEYVALUE_HPP_
