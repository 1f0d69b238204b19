// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace shoprl
{

/// Base for every error raised by the library.
class Error: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError: public Error
{
  public:
    using Error::Error;
};

/// A configuration value violates its invariants.
class ConfigError: public Error
{
  public:
    using Error::Error;
};

class EmptyInput: public Error
{
  public:
    using Error::Error;
};

class LengthMismatch: public Error
{
  public:
    using Error::Error;
};

/// A trajectory failed structural validation where a valid one was required.
class InvalidTrajectory: public Error
{
  public:
    using Error::Error;
};

/// A trajectory's decision record does not fit the policy's decision schema.
class SchemaMismatch: public Error
{
  public:
    using Error::Error;
};

class NonFiniteLogProb: public Error
{
  public:
    using Error::Error;
};

class NonFiniteLoss: public Error
{
  public:
    using Error::Error;
};

/// The query generator could not find catalog witnesses for a constraint set.
class Unsatisfiable: public Error
{
  public:
    using Error::Error;
};

/// A judge backend was asked for a verdict it does not declare.
class CapabilityError: public Error
{
  public:
    using Error::Error;
};

class BackendUnavailable: public Error
{
  public:
    using Error::Error;
};

class BackendMalformedOutput: public Error
{
  public:
    using Error::Error;
};

} // namespace shoprl
