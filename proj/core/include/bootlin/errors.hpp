#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bootlin {

//! Base class for all errors thrown by this library.
class error : public std::runtime_error
{
public:
  explicit error(const std::string& msg)
    : std::runtime_error(msg)
  {
  }
};

//! Invalid argument value (negative bandwidth, zero categories, ...).
class domain_error : public error
{
public:
  using error::error;
};

//! Requested operation is not defined for the given object, e.g. drawing
//! noise from a signed kernel.
class unsupported_operation : public error
{
public:
  using error::error;
};

//! A data-driven rule was given fewer observations than it needs.
class insufficient_data : public error
{
public:
  using error::error;
};

//! The data cannot identify the quantity (empty arm, all-constant design).
class degenerate_data : public error
{
public:
  using error::error;
};

//! Regression fit failed (singular design, non-convergence).
class fit_error : public error
{
public:
  using error::error;
};

//! Numerical routine failed to reach its tolerance. Carries the tolerance
//! that was actually achieved.
class numeric_error : public error
{
public:
  numeric_error(const std::string& msg, double achieved_tol)
    : error(msg)
    , achieved_tol_(achieved_tol)
  {
  }
  double achieved_tol() const { return achieved_tol_; }

private:
  double achieved_tol_;
};

//! Targeting step could not solve the score equation. Carries the last
//! absolute value of the empirical mean of the score.
class targeting_failure : public error
{
public:
  targeting_failure(const std::string& msg, double last_score)
    : error(msg)
    , last_score_(last_score)
  {
  }
  double last_score() const { return last_score_; }

private:
  double last_score_;
};

//! Studentization is impossible because a replicate has zero scale.
class studentization_error : public error
{
public:
  studentization_error(const std::string& msg, std::size_t replicate)
    : error(msg)
    , replicate_(replicate)
  {
  }
  std::size_t replicate() const { return replicate_; }

private:
  std::size_t replicate_;
};

//! File could not be read or parsed.
class io_error : public error
{
public:
  using error::error;
};

} // namespace bootlin
