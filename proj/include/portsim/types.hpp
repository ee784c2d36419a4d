#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace portsim {

enum class ConsumerId : std::int64_t {};
enum class ItemId : std::int64_t {};

template <typename Id>
constexpr std::int64_t raw(Id id) noexcept {
  return static_cast<std::int64_t>(static_cast<std::underlying_type_t<Id>>(id));
}

using ProviderId = std::string;

// Recommender ids order lexicographically; "RG" < "RN" is relied on for
// switch tie-breaking.
using RecommenderId = std::string;

inline const RecommenderId kGenericRecommender = "RG";
inline const RecommenderId kNicheRecommender = "RN";

enum class ConsumerType { Generic, Niche };
enum class ProviderType { Generic, Niche };

inline std::string_view to_string(ConsumerType t) {
  return t == ConsumerType::Niche ? "Niche" : "Generic";
}
inline std::string_view to_string(ProviderType t) {
  return t == ProviderType::Niche ? "Niche" : "Generic";
}

// Every library error derives from Error. The CLI maps ConfigError to
// exit code 1 and DataError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace portsim
