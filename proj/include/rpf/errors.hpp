#pragma once

#include <stdexcept>
#include <string>

namespace rpf {

// Invalid user-supplied settings: bad policy parameters, malformed config
// files, missing weather data, non-positive noise variances.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Every particle ended up with zero likelihood; the run cannot continue.
class DegeneracyError : public std::runtime_error {
public:
    DegeneracyError(const std::string& what, int step)
        : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

}  // namespace rpf
