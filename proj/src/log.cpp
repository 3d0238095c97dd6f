/*
 * Copyright 2026 The Disent Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "disent/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace disent {

namespace {

std::atomic<LogLevel> g_level{LogLevel::kWarning};
std::mutex g_mutex;

void emit(const char* prefix, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::cerr << prefix << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warning(std::string_view message) {
  if (g_level >= LogLevel::kWarning) emit("[warn] ", message);
}

void log_info(std::string_view message) {
  if (g_level >= LogLevel::kInfo) emit("[info] ", message);
}

}  // namespace disent
