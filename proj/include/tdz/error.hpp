#pragma once

#include <stdexcept>
#include <string>

namespace tdz {

// Failure categories. The numeric values are the CLI exit codes and the
// C API status codes, so they must stay stable.
enum class ErrorKind : int {
    Config = 2,
    Resource = 3,
    Undecided = 4,
    Domain = 5,
    Encoding = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Malformed branch index or an out-of-range tree depth.
struct EncodingError : Error {
    explicit EncodingError(const std::string& w) : Error(ErrorKind::Encoding, w) {}
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

// Edge, site or enumeration budget exceeded.
struct ResourceError : Error {
    explicit ResourceError(const std::string& w) : Error(ErrorKind::Resource, w) {}
};

// Inconsistent user configuration (k < n, empty J window, ...).
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};

}  // namespace tdz
