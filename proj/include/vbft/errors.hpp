/**
 * Copyright 2026 The VBFT Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace vbft {

// Malformed arguments: wrong lengths, duplicates, mismatched targets.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fewer than 2f+1 contributions where a quorum is required.
class QuorumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A state that the protocol guarantees cannot occur with at most f faults.
class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vbft
