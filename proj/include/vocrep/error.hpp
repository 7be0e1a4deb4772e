// Copyright 2026 The vocrep Authors.
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

namespace vocrep {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can catch one type and still inspect the concrete kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VOCREP_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

VOCREP_DEFINE_ERROR(DecodeError);
VOCREP_DEFINE_ERROR(UnsupportedFormatError);
VOCREP_DEFINE_ERROR(ArgumentError);
VOCREP_DEFINE_ERROR(ShapeError);
VOCREP_DEFINE_ERROR(ConfigError);
VOCREP_DEFINE_ERROR(InputTooShortError);
VOCREP_DEFINE_ERROR(EmptyCorpusError);
VOCREP_DEFINE_ERROR(SplitError);
VOCREP_DEFINE_ERROR(UndefinedMetricError);
VOCREP_DEFINE_ERROR(DegenerateTaskError);
VOCREP_DEFINE_ERROR(IncompatibleCheckpointError);
VOCREP_DEFINE_ERROR(CheckpointFormatError);
VOCREP_DEFINE_ERROR(TrainingDivergedError);
VOCREP_DEFINE_ERROR(TooFewPointsError);
VOCREP_DEFINE_ERROR(LegendOverflowError);
VOCREP_DEFINE_ERROR(IoError);

#undef VOCREP_DEFINE_ERROR

}  // namespace vocrep
