#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reflectcast {

// Base for every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define REFLECTCAST_DEFINE_ERROR(Name)          \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

// content pipeline
REFLECTCAST_DEFINE_ERROR(EmptyDocument);
REFLECTCAST_DEFINE_ERROR(SchemaValidationError);
REFLECTCAST_DEFINE_ERROR(EmptyGeneration);
REFLECTCAST_DEFINE_ERROR(PreconditionError);
REFLECTCAST_DEFINE_ERROR(DuplicateSection);
REFLECTCAST_DEFINE_ERROR(MismatchedSummary);
REFLECTCAST_DEFINE_ERROR(FormatError);

class MissingSection : public Error {
public:
    explicit MissingSection(int section_id)
        : Error("missing section " + std::to_string(section_id)), section_id_(section_id) {}
    int section_id() const { return section_id_; }

private:
    int section_id_;
};

// providers
class ProviderError : public Error {
public:
    enum class Kind { Timeout, Transport, Status };

    ProviderError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class RetryExhausted : public ProviderError {
public:
    using ProviderError::ProviderError;
};

REFLECTCAST_DEFINE_ERROR(ConfigError);

// session engine
REFLECTCAST_DEFINE_ERROR(EmptyScript);
REFLECTCAST_DEFINE_ERROR(IllegalTransition);
REFLECTCAST_DEFINE_ERROR(NotFinished);

// realtime service
REFLECTCAST_DEFINE_ERROR(BindError);
REFLECTCAST_DEFINE_ERROR(UnknownContent);
REFLECTCAST_DEFINE_ERROR(UnknownSession);
REFLECTCAST_DEFINE_ERROR(ProtocolViolation);
REFLECTCAST_DEFINE_ERROR(NoTurns);
REFLECTCAST_DEFINE_ERROR(ConnectionError);

// learner simulation
REFLECTCAST_DEFINE_ERROR(Stall);

// study analysis
REFLECTCAST_DEFINE_ERROR(OutOfRangeItem);
REFLECTCAST_DEFINE_ERROR(KeyLengthMismatch);
REFLECTCAST_DEFINE_ERROR(DegenerateVariance);
REFLECTCAST_DEFINE_ERROR(SampleTooSmall);

class RecordSchemaError : public Error {
public:
    RecordSchemaError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

#undef REFLECTCAST_DEFINE_ERROR

}  // namespace reflectcast
