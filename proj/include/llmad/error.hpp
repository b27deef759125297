#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llmad {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data (CSV rows, database files, result files) is malformed.
class DataError : public Error {
public:
    using Error::Error;
};

/// Model output is not valid JSON. Carries an excerpt of the raw text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string excerpt)
        : Error(what), excerpt_(std::move(excerpt)) {}
    const std::string& excerpt() const noexcept { return excerpt_; }

private:
    std::string excerpt_;
};

/// Model output is JSON but breaks the report schema. `subject` names the
/// offending field, value or index.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::string subject)
        : Error(what), subject_(std::move(subject)) {}
    const std::string& subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

/// Chat backend failure. `retriable` marks transport errors and rate limits.
class BackendError : public Error {
public:
    BackendError(const std::string& what, bool retriable, int attempts = 1, int status = 0)
        : Error(what), retriable_(retriable), attempts_(attempts), status_(status) {}

    bool retriable() const noexcept { return retriable_; }
    int attempts() const noexcept { return attempts_; }
    int status() const noexcept { return status_; }

private:
    bool retriable_;
    int attempts_;
    int status_;
};

/// Non-retriable credential rejection; the provider message is kept verbatim.
class AuthError : public BackendError {
public:
    AuthError(const std::string& what, int status)
        : BackendError(what, false, 1, status) {}
};

} // namespace llmad
