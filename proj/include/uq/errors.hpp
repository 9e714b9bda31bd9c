#pragma once

#include <stdexcept>
#include <string>

namespace uq {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidInputError : Error {
    using Error::Error;
};

struct InvalidSpecError : Error {
    using Error::Error;
};

struct InvalidConfigError : Error {
    using Error::Error;
};

struct PlanInfeasibleError : Error {
    using Error::Error;
};

struct LogprobsRequiredError : Error {
    using Error::Error;
};

struct ExtractionError : Error {
    using Error::Error;
};

struct InsufficientSamplesError : Error {
    using Error::Error;
};

struct DegenerateInputError : Error {
    using Error::Error;
};

// A metric was asked to consume a SampleSet flagged partial without the
// explicit allow-partial override.
struct PartialSampleSetError : Error {
    using Error::Error;
};

struct ProviderError : Error {
    using Error::Error;
};

struct ProviderUnreachableError : ProviderError {
    using ProviderError::ProviderError;
};

struct ProviderRejectedError : ProviderError {
    ProviderRejectedError(int status, const std::string& body_excerpt)
        : ProviderError("provider rejected request, status " + std::to_string(status) +
                        ": " + body_excerpt),
          status(status),
          body_excerpt(body_excerpt) {}
    int status;
    std::string body_excerpt;
};

}  // namespace uq
