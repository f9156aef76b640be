// Copyright 2026 The Convex Authors.
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

#include <stdexcept>
#include <string>

namespace convex {

// Base of every engine error. `code()` is the stable machine-readable name
// used by the HTTP layer and the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define CONVEX_DEFINE_ERROR(Name, Code)                       \
  class Name : public ::convex::Error {                       \
   public:                                                    \
    explicit Name(const std::string& message)                 \
        : ::convex::Error(Code, message) {}                   \
  }

}  // namespace convex
