#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ivb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NotPSD : Error { using Error::Error; };
struct NotStochastic : Error { using Error::Error; };
struct BadParam : Error { using Error::Error; };
struct TieAtTop : Error { using Error::Error; };
struct SingularDesign : Error { using Error::Error; };
struct DegenerateSpan : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct BadDelta : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct EmptySelection : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };

// Raised when a safety cap trips mid-run; carries enough state for the
// harness to record the aborted trial as a flagged row instead of dying.
struct CapExceeded : Error {
  CapExceeded(const std::string& msg, long long samples, int phases, int partial)
      : Error(msg), samples_used(samples), phases_done(phases), partial_recommendation(partial) {}
  long long samples_used;
  int phases_done;
  int partial_recommendation;
};

}  // namespace ivb
