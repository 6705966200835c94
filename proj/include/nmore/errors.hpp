#pragma once

#include <stdexcept>
#include <string>

namespace nmore {

// Bad user input: parameters outside their domain, malformed grids.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation ran but produced an unusable result (non-finite state,
// step size too large, quadrature not converged, degenerate fit).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nmore
