#pragma once

#include <stdexcept>
#include <string>

namespace cshield {

// Malformed or inconsistent input (files, parameters, models).
class InputError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A desk-scale limit was exceeded (state explosion guard, oracle limits).
class ScaleLimitError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace cshield
