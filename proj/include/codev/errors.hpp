#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace codev {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or non-retryable request failure (4xx, unset auth var).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Transport-level failure that persisted through the retry budget.
class TransientFailure : public Error {
public:
    TransientFailure(const std::string& what, int retries)
        : Error(what), retries(retries) {}
    int retries = 0;
};

/// No balanced JSON object could be extracted from a model reply.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw)
        : Error(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

/// Extracted object is missing required fields or has wrong types.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string raw)
        : Error(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

class FixtureMissError : public Error {
public:
    using Error::Error;
};

/// Offline mode: the response cache has no entry for a request digest.
class CacheMissError : public Error {
public:
    using Error::Error;
};

class EnsembleFailure : public Error {
public:
    EnsembleFailure(const std::string& what, std::string submission)
        : Error(what), submission_id(std::move(submission)) {}
    std::string submission_id;
};

class SummarizationFailure : public Error {
public:
    SummarizationFailure(const std::string& what, std::string raw)
        : Error(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

class ProbabilityExtractionError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DegenerateMatrixError : public Error {
public:
    using Error::Error;
};

class IncompleteMatrixError : public Error {
public:
    IncompleteMatrixError(const std::string& what, std::vector<std::string> gaps)
        : Error(what), gaps(std::move(gaps)) {}
    std::vector<std::string> gaps;
};

/// Key sets of two aligned score maps differ; lists the offending ids.
class KeyMismatchError : public Error {
public:
    KeyMismatchError(const std::string& what, std::vector<std::string> ids)
        : Error(what), ids(std::move(ids)) {}
    std::vector<std::string> ids;
};

}  // namespace codev
