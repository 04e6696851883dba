#pragma once

#include <stdexcept>
#include <string>

namespace sgca {

// Invalid arguments: shapes, ranges, divisibility.
class parameter_error : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Failures arising from the numbers themselves.
class numerical_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class not_psd_error : public numerical_error
{
public:
    not_psd_error(const std::string& what, double eigenvalue)
        : numerical_error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class singular_error : public numerical_error
{
public:
    singular_error(const std::string& what, double min_eigenvalue)
        : numerical_error(what), min_eigenvalue_(min_eigenvalue) {}
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

class convergence_error : public numerical_error
{
public:
    using numerical_error::numerical_error;
};

// Non-finite iterate inside an iterative estimator.
class divergence_error : public numerical_error
{
public:
    divergence_error(const std::string& what, long iteration)
        : numerical_error(what), iteration_(iteration) {}
    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

} // namespace sgca
