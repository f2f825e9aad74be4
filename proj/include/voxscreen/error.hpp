/*
 * Copyright 2026 The voxscreen Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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
#include <string_view>

namespace voxscreen {

enum class ErrorKind {
  kParseError,
  kUnsupportedFormat,
  kEmptyAudio,
  kInvalidArgument,
  kInsufficientSignal,
  kNoVoicedSpeech,
  kInsufficientPeriods,
  kNoRecurrence,
  kSchemaError,
  kCannotOversample,
  kDegenerateLabels,
  kFoldDegenerate,
  kUndefined,
  kModelUnsupported,
  kTooLarge,
  kNoOp,
  kIoError,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace voxscreen
