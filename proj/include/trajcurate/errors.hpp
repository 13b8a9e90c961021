#pragma once

#include <stdexcept>
#include <string>

namespace trajcurate {

// Base for everything this library throws. Recoverable conditions
// (per-line schema errors, validation violations) are values, not throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class TooFewSamples : public Error {
public:
    explicit TooFewSamples(const std::string& what) : Error(what) {}
};

class SingleClassData : public Error {
public:
    explicit SingleClassData(const std::string& what) : Error(what) {}
};

class NonFiniteLoss : public Error {
public:
    explicit NonFiniteLoss(const std::string& what) : Error(what) {}
};

class FeatureMismatch : public Error {
public:
    explicit FeatureMismatch(const std::string& what) : Error(what) {}
};

class UnknownFeature : public Error {
public:
    explicit UnknownFeature(const std::string& what) : Error(what) {}
};

class RatioDomain : public Error {
public:
    explicit RatioDomain(const std::string& what) : Error(what) {}
};

class JudgeUnavailable : public Error {
public:
    explicit JudgeUnavailable(const std::string& what) : Error(what) {}
};

class JudgeMalformed : public Error {
public:
    explicit JudgeMalformed(const std::string& what) : Error(what) {}
};

class TrajectoryExcluded : public Error {
public:
    explicit TrajectoryExcluded(const std::string& what) : Error(what) {}
};

class IoFailure : public Error {
public:
    explicit IoFailure(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace trajcurate
