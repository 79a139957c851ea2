// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fggm {

enum class ErrorKind {
    Dimension,   // shapes disagree
    Validation,  // argument outside its documented domain
    Contract,    // API misuse (e.g. backward on a non-scalar)
    Io,          // file missing / unreadable / unwritable
    BadMagic,    // named-tensor file does not start with the magic bytes
    Length,      // declared sizes and payload length disagree
    Config,      // run configuration rejected
    Runtime,     // anything else raised while training
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fggm
