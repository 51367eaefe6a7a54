#pragma once

#include <stdexcept>
#include <string>

namespace cqed {

// All library failures derive from Error and carry a stable category tag so
// callers (notably the CLI) can map them to machine-readable diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

#define CQED_DEFINE_ERROR(Name)                                    \
    struct Name : Error {                                          \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

CQED_DEFINE_ERROR(TruncationTooSmall);
CQED_DEFINE_ERROR(DimensionMismatch);
CQED_DEFINE_ERROR(InvalidState);
CQED_DEFINE_ERROR(InvalidAtomState);
CQED_DEFINE_ERROR(StepSizeUnderflow);
CQED_DEFINE_ERROR(NoConvergence);
CQED_DEFINE_ERROR(DegenerateNullSpace);
CQED_DEFINE_ERROR(UnstableSystem);
CQED_DEFINE_ERROR(UnphysicalMoments);
CQED_DEFINE_ERROR(ZeroSensitivity);
CQED_DEFINE_ERROR(ZeroCoherence);
CQED_DEFINE_ERROR(EmptyWindow);
CQED_DEFINE_ERROR(ConfigError);

#undef CQED_DEFINE_ERROR

}  // namespace cqed
