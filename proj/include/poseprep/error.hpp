#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poseprep {

enum class Errc {
  InvalidArgument,
  InvalidState,
  AllBodyMissing,
  ShouldersMissing,
  DegenerateShoulders,
  NoValidFrame,
  EmptyClipGeometry,
  NoValidSigningSpace,
  InvalidMaxGap,
  InvalidStddev,
  DegenerateBox,
  IndexOutOfRange,
  WrongKind,
  DegenerateDistribution,
  EmptyInput,
  Format,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidState: return "InvalidState";
    case Errc::AllBodyMissing: return "AllBodyMissing";
    case Errc::ShouldersMissing: return "ShouldersMissing";
    case Errc::DegenerateShoulders: return "DegenerateShoulders";
    case Errc::NoValidFrame: return "NoValidFrame";
    case Errc::EmptyClipGeometry: return "EmptyClipGeometry";
    case Errc::NoValidSigningSpace: return "NoValidSigningSpace";
    case Errc::InvalidMaxGap: return "InvalidMaxGap";
    case Errc::InvalidStddev: return "InvalidStddev";
    case Errc::DegenerateBox: return "DegenerateBox";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::WrongKind: return "WrongKind";
    case Errc::DegenerateDistribution: return "DegenerateDistribution";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::Format: return "Format";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. Every library failure is
/// reported through this type.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Non-fatal findings (sentinel collisions, attention rows that do not sum
/// to one, degenerate histograms). Callers pass one in when they care.
struct Diagnostics {
  struct Entry {
    std::string code;
    std::string message;
  };
  std::vector<Entry> warnings;

  void warn(std::string code, std::string message) {
    warnings.push_back({std::move(code), std::move(message)});
  }

  std::size_t count(std::string_view code) const {
    std::size_t n = 0;
    for (const auto& w : warnings) n += (w.code == code);
    return n;
  }

  bool empty() const noexcept { return warnings.empty(); }
};

}  // namespace poseprep
