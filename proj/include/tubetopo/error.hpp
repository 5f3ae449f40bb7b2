// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tubetopo {

/// Bad caller input: shape mismatch, non-binary mask, out-of-range option.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure reading or writing a file, including malformed containers.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A library invariant did not hold. Always a bug.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace tubetopo
