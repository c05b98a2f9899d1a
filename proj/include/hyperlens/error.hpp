#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperlens {

enum class ErrorKind {
  MalformedLine,
  BadTimestamp,
  BadStatus,
  AnonymousEntry,
  ConflictingUser,
  UnknownTerm,
  EmptyDictionary,
  NoTransactions,
  ItemsetSizeCap,
  NoRules,
  InfeasibleBalance,
  KTooLarge,
  EmptyCluster,
  NoProfiles,
  InvalidConfig,
  ConfigError,
  MissingArtifact,
  BadInput,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::BadTimestamp: return "BadTimestamp";
    case ErrorKind::BadStatus: return "BadStatus";
    case ErrorKind::AnonymousEntry: return "AnonymousEntry";
    case ErrorKind::ConflictingUser: return "ConflictingUser";
    case ErrorKind::UnknownTerm: return "UnknownTerm";
    case ErrorKind::EmptyDictionary: return "EmptyDictionary";
    case ErrorKind::NoTransactions: return "NoTransactions";
    case ErrorKind::ItemsetSizeCap: return "ItemsetSizeCap";
    case ErrorKind::NoRules: return "NoRules";
    case ErrorKind::InfeasibleBalance: return "InfeasibleBalance";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::EmptyCluster: return "EmptyCluster";
    case ErrorKind::NoProfiles: return "NoProfiles";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::BadInput: return "BadInput";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

// Every failure raised by the library carries a category so callers (the CLI
// in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failure with the byte offset of the first offending character.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t offset, const std::string& what)
      : Error(kind, what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace hyperlens
