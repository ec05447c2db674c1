#pragma once

#include <stdexcept>
#include <string>

namespace gazeconv {

// Error taxonomy shared by the whole toolkit. The CLI maps these onto
// exit codes: ConfigError -> 2, IoError/FormatError/DataError -> 3,
// NumericError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct LengthError : Error {
    using Error::Error;
};

struct LabelError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

} // namespace gazeconv
