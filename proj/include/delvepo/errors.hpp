#pragma once

#include <stdexcept>
#include <string>

namespace delvepo {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class MissingSlotValue : public Error {
  public:
    explicit MissingSlotValue(const std::string& type_name)
        : Error("genome has no entry for component type '" + type_name + "'") {}
};

class MalformedMarkup : public Error {
  public:
    explicit MalformedMarkup(const std::string& what) : Error(what) {}
};

class EmptyPool : public Error {
  public:
    explicit EmptyPool(const std::string& type_name)
        : Error("no candidate values for component type '" + type_name + "'") {}
};

class TypeMismatch : public Error {
  public:
    explicit TypeMismatch(const std::string& what) : Error(what) {}
};

class PopulationTooSmall : public Error {
  public:
    explicit PopulationTooSmall(const std::string& what) : Error(what) {}
};

class BackendUnavailable : public Error {
  public:
    explicit BackendUnavailable(const std::string& what) : Error(what) {}
};

class ContentEmpty : public Error {
  public:
    explicit ContentEmpty(const std::string& what) : Error(what) {}
};

class UnmatchedPattern : public Error {
  public:
    explicit UnmatchedPattern(const std::string& what) : Error(what) {}
};

class LengthMismatch : public Error {
  public:
    explicit LengthMismatch(const std::string& what) : Error(what) {}
};

class MalformedPromptFile : public Error {
  public:
    explicit MalformedPromptFile(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace delvepo
