// Copyright 2026 The GAIN-NER Authors.
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

#ifndef GAIN_LOG_H_
#define GAIN_LOG_H_

#include <string_view>

namespace gain {

// Sets library log verbosity: trace, debug, info, warn, error, off.
// Unknown names raise ConfigError.
void set_log_level(std::string_view level);

// Applies $GAIN_LOG when set; otherwise `fallback`.
void configure_logging_from_env(std::string_view fallback = "info");

}  // namespace gain

#endif  // GAIN_LOG_H_
