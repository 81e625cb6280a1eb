// Copyright 2026 The mntuple Authors
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

namespace mntuple {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operating-system level I/O failure (open, read, write, sync).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The file ends before its trailer; it was never completed.
class IncompleteFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// A checksum over file metadata does not match.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// A codec id not known to this implementation.
class UnknownCodecError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Compression backend failure or a frame that does not decode.
class CodecError : public Error {
 public:
  using Error::Error;
};

/// Invalid schema, or a value that does not conform to its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// API misuse: an operation called in a state that does not allow it.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Invalid tool configuration (bad paths, unresolvable field references).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mntuple
