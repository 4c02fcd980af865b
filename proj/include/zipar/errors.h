// Copyright 2026 The zipar Authors.
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

namespace zipar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Position outside the grid.
class CoordinateError : public Error {
 public:
  using Error::Error;
};

// Cache/state divergence, double commit, broken decode-state invariants.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Invalid shapes, windows, sampler settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Arguments outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Should be unreachable; carries a state dump.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace zipar
