#pragma once

#include <stdexcept>
#include <string>

namespace mcgc {

enum class ErrorKind {
  Parse,
  EmptyInput,
  GroundModel,
  Domain,
  Config,
  Parameter,
  Contract,
  Resource,
  Degenerate,
};

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

} // namespace mcgc
