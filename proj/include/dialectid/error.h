#ifndef DIALECTID_ERROR_H_
#define DIALECTID_ERROR_H_

#include <stdexcept>
#include <string>

namespace dialectid {

// Mirrors dlid_status in c_api.h; keep the numeric values in sync.
enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kDuplicateConstruction = 4,
  kInsufficientData = 5,
  kDegenerateData = 6,
  kSpaceMismatch = 7,
  kEmptyRegion = 8,
  kInvalidProfile = 9,
  kFeatureSpaceExhausted = 10,
  kConfig = 11,
  kStage = 12,
  kInternal = 13,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Grammar and lexicon parse failures carry the offending 1-based line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error(ErrorCode::kParse,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace dialectid

#endif  // DIALECTID_ERROR_H_
