#pragma once

#include <stdexcept>
#include <string>

namespace bpmri {

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Parameters out of their documented domain (bad rate, patch larger than image, ...).
struct InvalidConfig : Error
{
  using Error::Error;
};

struct DimensionMismatch : Error
{
  using Error::Error;
};

struct IoError : Error
{
  using Error::Error;
};

} // namespace bpmri
