#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace resilience {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct SingularMatrix : Error {
    using Error::Error;
};

/// The eigenvector basis is numerically rank-deficient; the matrix is treated
/// as defective and no real block decomposition is produced.
struct DefectiveMatrix : Error {
    using Error::Error;
};

/// Some eigenvalue has a (numerically) zero real part, so the real block form
/// is not invertible.
struct SingularRealPart : Error {
    using Error::Error;
};

struct SingularAbsoluteMatrix : Error {
    using Error::Error;
};

struct SyntaxError : Error {
    std::size_t offset;
    SyntaxError(const std::string& msg, std::size_t at)
        : Error(msg + " (at offset " + std::to_string(at) + ")"), offset(at) {}
};

struct IndexError : Error {
    using Error::Error;
};

struct UnknownVariable : Error {
    std::size_t offset;
    UnknownVariable(const std::string& msg, std::size_t at)
        : Error(msg + " (at offset " + std::to_string(at) + ")"), offset(at) {}
};

struct HorizonExceeded : Error {
    using Error::Error;
};

struct SampleBudgetExceeded : Error {
    using Error::Error;
};

struct NotEquilibrium : Error {
    using Error::Error;
};

struct RegionExcludesEquilibrium : Error {
    using Error::Error;
};

/// A trajectory left the representable range; carries the time of blow-up.
struct NonFinite : Error {
    double time;
    NonFinite(const std::string& msg, double t)
        : Error(msg + " (at t = " + std::to_string(t) + ")"), time(t) {}
};

struct ConfigError : Error {
    std::string path;
    ConfigError(const std::string& msg, std::string field_path)
        : Error(msg + " [" + field_path + "]"), path(std::move(field_path)) {}
};

struct MissingCertificate : Error {
    using Error::Error;
};

struct CsvFormatError : Error {
    using Error::Error;
};

}  // namespace resilience
