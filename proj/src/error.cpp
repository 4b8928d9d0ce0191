// Copyright 2026 The usqz Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "usqz/error.hpp"

namespace usqz {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kCrossingContours: return "CrossingContours";
    case ErrorCode::kGeometryMismatch: return "GeometryMismatch";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kTopologyFailure: return "TopologyFailure";
    case ErrorCode::kBadModel: return "BadModel";
    case ErrorCode::kUnencodableDelta: return "UnencodableDelta";
    case ErrorCode::kRangeViolation: return "RangeViolation";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kInvalidHeader: return "InvalidHeader";
    case ErrorCode::kMalformedContour: return "MalformedContour";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kTrailingData: return "TrailingData";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kBinningMismatch: return "BinningMismatch";
    case ErrorCode::kInsufficientPixels: return "InsufficientPixels";
    case ErrorCode::kUndefinedMetric: return "UndefinedMetric";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
  }
  return "Unknown";
}

}  // namespace usqz
