#pragma once

#include <stdexcept>
#include <string>

namespace spectral {

// Every failure mode gets its own type so callers and tests can tell them apart.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SPECTRAL_ERROR_TYPE(NAME)                                          \
    struct NAME : Error {                                                  \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

SPECTRAL_ERROR_TYPE(ShapeMismatch);
SPECTRAL_ERROR_TYPE(SymmetryViolation);
SPECTRAL_ERROR_TYPE(ZeroVector);
SPECTRAL_ERROR_TYPE(KernelTooLarge);
SPECTRAL_ERROR_TYPE(SizeRegimeUnsupported);
SPECTRAL_ERROR_TYPE(RegimeViolation);
SPECTRAL_ERROR_TYPE(UpsamplePresent);
SPECTRAL_ERROR_TYPE(SpecMismatch);
SPECTRAL_ERROR_TYPE(InsufficientSamples);
SPECTRAL_ERROR_TYPE(DegenerateLayer);
SPECTRAL_ERROR_TYPE(ZeroEnergy);
SPECTRAL_ERROR_TYPE(SizeTooSmall);
SPECTRAL_ERROR_TYPE(ConfigError);
SPECTRAL_ERROR_TYPE(IoError);

#undef SPECTRAL_ERROR_TYPE

}  // namespace spectral
