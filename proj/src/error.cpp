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

#include "voxscreen/error.hpp"

namespace voxscreen {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::kEmptyAudio: return "EmptyAudio";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kInsufficientSignal: return "InsufficientSignal";
    case ErrorKind::kNoVoicedSpeech: return "NoVoicedSpeech";
    case ErrorKind::kInsufficientPeriods: return "InsufficientPeriods";
    case ErrorKind::kNoRecurrence: return "NoRecurrence";
    case ErrorKind::kSchemaError: return "SchemaError";
    case ErrorKind::kCannotOversample: return "CannotOversample";
    case ErrorKind::kDegenerateLabels: return "DegenerateLabels";
    case ErrorKind::kFoldDegenerate: return "FoldDegenerate";
    case ErrorKind::kUndefined: return "Undefined";
    case ErrorKind::kModelUnsupported: return "ModelUnsupported";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kNoOp: return "NoOp";
    case ErrorKind::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace voxscreen
