#pragma once

#include <stdexcept>
#include <string>

namespace mset {

// Every library failure derives from Error; category() is the stable,
// machine-parsable tag the CLI prints on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct DegenerateVectorError : Error {
  explicit DegenerateVectorError(const std::string& w) : Error("degenerate-vector", w) {}
};
struct RankError : Error {
  explicit RankError(const std::string& w) : Error("rank", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error("range", w) {}
};
struct GenerationError : Error {
  explicit GenerationError(const std::string& w) : Error("generation", w) {}
};
struct CapacityError : Error {
  explicit CapacityError(const std::string& w) : Error("capacity", w) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error("contract", w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("numeric", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

// Load failures carry a distinct kind per failure mode.
class LoadError : public Error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, Malformed };
  LoadError(Kind kind, const std::string& w) : Error(category_for(kind), w), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  static std::string category_for(Kind k) {
    switch (k) {
      case Kind::BadMagic: return "load-bad-magic";
      case Kind::VersionMismatch: return "load-version";
      case Kind::Truncated: return "load-truncated";
      default: return "load-malformed";
    }
  }
  Kind kind_;
};

}  // namespace mset
