#ifndef FLOWNET_COMMON_HPP
#define FLOWNET_COMMON_HPP

#include <stdexcept>
#include <string>

namespace flownet {

// Bad or inconsistent input (files, flags, parameter values).
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (singular systems, non-convergent factorizations).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace flownet

#endif
