#ifndef STLABEL_ERRORS_HPP
#define STLABEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stlabel {

/**
 * Raised when inputs violate a documented contract: malformed files,
 * out-of-range indices, inconsistent identifiers, bad configuration.
 * The CLI maps this to exit code 1.
 */
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/**
 * Raised when the filesystem misbehaves (missing file, failed write).
 * The CLI maps this to exit code 2.
 */
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}

#endif
