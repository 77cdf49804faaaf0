#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace langseg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two rasters that must share a shape do not.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed file or wire payload. `offset()` is the byte position where
/// reading failed, when known.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, std::size_t offset = npos)
        : Error(offset == npos ? what : what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace langseg
