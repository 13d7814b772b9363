// Copyright 2026 The visgp Authors.
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

#include "visgp/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace visgp::log {
namespace {

std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

const char* level_name(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: return "off";
  }
  return "?";
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void write(Level lvl, std::string_view event, std::string_view fields) {
  if (static_cast<int>(lvl) < static_cast<int>(g_level.load())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "level=%s event=%.*s%s%.*s\n", level_name(lvl), static_cast<int>(event.size()),
               event.data(), fields.empty() ? "" : " ", static_cast<int>(fields.size()), fields.data());
}

StageTimer::StageTimer(std::string name)
    : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

StageTimer::~StageTimer() {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", elapsed_seconds());
  info("stage", "name=" + name_ + " seconds=" + buf);
}

double StageTimer::elapsed_seconds() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

}  // namespace visgp::log
