/* Copyright 2026 The hgnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HGNET_ERROR_HPP_
#define HGNET_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hg {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid shapes, channel counts or architecture fields.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (annotations, checkpoints, joints).
class DataError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. a second backward pass on a consumed tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace hg

#endif  // HGNET_ERROR_HPP_
