// Copyright 2026 The IQSD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IQSD_LOG_HPP_
#define IQSD_LOG_HPP_

#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace iqsd {

// Diagnostic messages (clamping events, codec substitutions). They never
// go into result artifacts; by default they are written to stderr.
class Log {
 public:
  using Sink = std::function<void(const std::string&)>;

  static void set_sink(Sink sink) {
    std::lock_guard<std::mutex> lock(mutex());
    sink_ref() = std::move(sink);
  }

  static void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(mutex());
    if (sink_ref()) sink_ref()(message);
  }

  // Emits `message` only the first time `key` is seen in this process.
  static void warn_once(const std::string& key, const std::string& message) {
    {
      std::lock_guard<std::mutex> lock(mutex());
      if (!seen().insert(key).second) return;
    }
    warn(message);
  }

 private:
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }
  static Sink& sink_ref() {
    static Sink s = [](const std::string& m) { std::cerr << "iqsd: " << m << '\n'; };
    return s;
  }
  static std::set<std::string>& seen() {
    static std::set<std::string> s;
    return s;
  }
};

}  // namespace iqsd

#endif  // IQSD_LOG_HPP_
