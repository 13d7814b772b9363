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

#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace visgp::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();

/// Emits one structured line: `level=info event=<event> <fields>`.
void write(Level level, std::string_view event, std::string_view fields = {});

inline void info(std::string_view event, std::string_view fields = {}) { write(Level::Info, event, fields); }
inline void warn(std::string_view event, std::string_view fields = {}) { write(Level::Warn, event, fields); }
inline void debug(std::string_view event, std::string_view fields = {}) { write(Level::Debug, event, fields); }

/// Logs `event=stage name=<name> seconds=<t>` when it goes out of scope.
class StageTimer {
 public:
  explicit StageTimer(std::string name);
  ~StageTimer();
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

  double elapsed_seconds() const;

 private:
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace visgp::log
