// Copyright 2026 The cryb Authors.
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

#include "cryb/common/error.hpp"

namespace cryb {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "IoError";
    case Errc::MalformedWav: return "MalformedWav";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::UpsamplingRequested: return "UpsamplingRequested";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::WrongLength: return "WrongLength";
    case Errc::BadBandIndex: return "BadBandIndex";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadClassIndex: return "BadClassIndex";
    case Errc::NoForwardRecorded: return "NoForwardRecorded";
    case Errc::BadShape: return "BadShape";
    case Errc::BadConfig: return "BadConfig";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::ArchMismatch: return "ArchMismatch";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::SingleClass: return "SingleClass";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::EmptySet: return "EmptySet";
    case Errc::SilentSignal: return "SilentSignal";
    case Errc::SilentNoise: return "SilentNoise";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::MissingArtifacts: return "MissingArtifacts";
  }
  return "Unknown";
}

}  // namespace cryb
