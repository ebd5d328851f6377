#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace polylab {

// Exit-code class for the CLI. Library code only throws, the runner maps.
enum class ErrorClass { Config, Numeric, Model };

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ErrorClass c = ErrorClass::Numeric)
        : std::runtime_error(what), class_(c) {}
    ErrorClass error_class() const { return class_; }

private:
    ErrorClass class_;
};

#define POLYLAB_ERROR(Name)                                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}  \
    }

POLYLAB_ERROR(InvalidMap);
POLYLAB_ERROR(NoBracket);
POLYLAB_ERROR(NonMonotone);
POLYLAB_ERROR(NotCrossing);
POLYLAB_ERROR(SingularTransit);
POLYLAB_ERROR(NotAffine);
POLYLAB_ERROR(InvalidCharNum);
POLYLAB_ERROR(DegenerateConfig);
POLYLAB_ERROR(InsufficientEvents);
POLYLAB_ERROR(NotRealizable);
POLYLAB_ERROR(BasinFailed);
POLYLAB_ERROR(RankDeficient);
POLYLAB_ERROR(StepFailed);
POLYLAB_ERROR(SingularityHit);
POLYLAB_ERROR(StepUnderflow);
POLYLAB_ERROR(BadSpan);
POLYLAB_ERROR(NonPositiveDifferences);
POLYLAB_ERROR(NotASaddle);
POLYLAB_ERROR(ParseError);

#undef POLYLAB_ERROR

class DomainError : public Error {
public:
    DomainError(int stage, double x, const std::string& what)
        : Error("DomainError: stage " + std::to_string(stage) + ": " + what),
          stage_(stage), x_(x) {}
    int stage() const { return stage_; }
    double x() const { return x_; }

private:
    int stage_;
    double x_;
};

class ConstructionFailed : public Error {
public:
    ConstructionFailed(const std::string& what, double max_admissible)
        : Error("ConstructionFailed: " + what), max_admissible_(max_admissible) {}
    double max_admissible() const { return max_admissible_; }

private:
    double max_admissible_;
};

class NoEvent : public Error {
public:
    explicit NoEvent(int n) : Error("NoEvent: winding window " + std::to_string(n) + " is empty"), n_(n) {}
    int winding() const { return n_; }

private:
    int n_;
};

class NewtonDiverged : public Error {
public:
    NewtonDiverged(const std::string& what, std::vector<double> trace)
        : Error("NewtonDiverged: " + what), trace_(std::move(trace)) {}
    // residual norm per iteration
    const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

class PlacementFailed : public Error {
public:
    PlacementFailed(const std::string& cell, double achieved, double wanted)
        : Error("PlacementFailed: " + cell + " landed at " + std::to_string(achieved) +
                ", wanted " + std::to_string(wanted)),
          cell_(cell), achieved_(achieved) {}
    const std::string& cell() const { return cell_; }
    double achieved() const { return achieved_; }

private:
    std::string cell_;
    double achieved_;
};

class ModelInvalid : public Error {
public:
    explicit ModelInvalid(std::vector<std::string> violations)
        : Error("ModelInvalid: " + join(violations), ErrorClass::Model),
          violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& e : v) {
            if (!s.empty()) s += "; ";
            s += e;
        }
        return s;
    }
    std::vector<std::string> violations_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& pointer, const std::string& what)
        : Error("ConfigError at " + pointer + ": " + what, ErrorClass::Config), pointer_(pointer) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

}  // namespace polylab
