#pragma once

#include <stdexcept>
#include <string>

namespace crfmm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad geometric input such as a zero-length segment.
class GeometryError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (files, labels, configs).
class DataError : public Error {
public:
    using Error::Error;
};

inline DataError data_error_at(std::size_t line, const std::string& what) {
    return DataError("line " + std::to_string(line) + ": " + what);
}

} // namespace crfmm
