// Copyright (c) 2026 The fcv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FCV_ERRORS_HPP_
#define FCV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fcv {

// Base type for all errors raised by the library. Subtypes exist so callers
// (and the HTTP layer) can branch on the failure mode.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FCV_ERROR_TYPE(NAME)  \
  class NAME : public Error { \
   public:                    \
    using Error::Error;       \
  };

FCV_ERROR_TYPE(MalformedContainer)   // broken RIFF/WAVE or checkpoint structure
FCV_ERROR_TYPE(UnsupportedEncoding)  // WAV payloads other than PCM16 / float32
FCV_ERROR_TYPE(ClipTooShort)
FCV_ERROR_TYPE(InvalidBand)
FCV_ERROR_TYPE(ShapeMismatch)
FCV_ERROR_TYPE(TapMismatch)
FCV_ERROR_TYPE(DimMismatch)
FCV_ERROR_TYPE(InputTooSmall)
FCV_ERROR_TYPE(BadMagic)
FCV_ERROR_TYPE(CrcMismatch)
FCV_ERROR_TYPE(VersionUnsupported)
FCV_ERROR_TYPE(TensorShapeMismatch)
FCV_ERROR_TYPE(TooFewSamples)
FCV_ERROR_TYPE(EmptyTrainSet)
FCV_ERROR_TYPE(SingleClass)

#undef FCV_ERROR_TYPE

}  // namespace fcv

#endif  // FCV_ERRORS_HPP_
