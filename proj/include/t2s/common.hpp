#pragma once

#include <stdexcept>
#include <string>

namespace t2s {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, records, arguments).
class DataError : public Error {
public:
    using Error::Error;
};

/// A required score or embedding is not available.
class MissingScoreError : public Error {
public:
    using Error::Error;
};

/// A provider answered with something that violates the wire contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A provider could not be reached or kept failing after retries.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Five-level agreement value: 1 = completely disagree ... 5 = completely agree.
class AgreementLabel {
public:
    static constexpr int kMin = 1;
    static constexpr int kMax = 5;
    static constexpr int kNeutral = 3;

    constexpr AgreementLabel() = default;

    constexpr explicit AgreementLabel(int value) : value_(value) {
        if (value < kMin || value > kMax) {
            throw DataError("agreement label out of range [1,5]: " + std::to_string(value));
        }
    }

    static constexpr AgreementLabel neutral() { return AgreementLabel(kNeutral); }

    constexpr int value() const { return value_; }

    friend constexpr bool operator==(AgreementLabel, AgreementLabel) = default;
    friend constexpr auto operator<=>(AgreementLabel, AgreementLabel) = default;

private:
    int value_ = kNeutral;
};

inline const char* label_name(AgreementLabel label) {
    switch (label.value()) {
        case 1: return "completely disagree";
        case 2: return "disagree";
        case 3: return "neither disagree nor agree";
        case 4: return "agree";
        default: return "completely agree";
    }
}

}  // namespace t2s
