#ifndef VSTREAM_ERRORS_H_
#define VSTREAM_ERRORS_H_

#include <exception>
#include <string>
#include <utility>

namespace vstream {

// Root of every error thrown by the library. The message can be prefixed
// with context (a file path, a stream id) while the exception propagates,
// so `catch (Error& e) { e.add_context(path); throw; }` keeps the dynamic
// type intact.
class Error : public std::exception {
 public:
  explicit Error(std::string message) : message_(std::move(message)) {}
  const char* what() const noexcept override { return message_.c_str(); }
  void add_context(const std::string& context) {
    message_ = context + ": " + message_;
  }

 private:
  std::string message_;
};

// Input violates a documented contract. The CLI maps these to exit code 1.
class ValidationError : public Error {
  using Error::Error;
};

// The filesystem or a file's syntax failed us. The CLI maps these to exit
// code 2.
class IoError : public Error {
  using Error::Error;
};

class ParseError : public IoError {
  using IoError::IoError;
};

#define VSTREAM_DEFINE_VALIDATION_ERROR(Name) \
  class Name : public ValidationError {       \
   public:                                    \
    using ValidationError::ValidationError;   \
  }

VSTREAM_DEFINE_VALIDATION_ERROR(MissingPair);
VSTREAM_DEFINE_VALIDATION_ERROR(InvalidPairKey);
VSTREAM_DEFINE_VALIDATION_ERROR(DimensionMismatch);
VSTREAM_DEFINE_VALIDATION_ERROR(NonFiniteValue);
VSTREAM_DEFINE_VALIDATION_ERROR(InvalidRepresentation);
VSTREAM_DEFINE_VALIDATION_ERROR(DuplicateStream);
VSTREAM_DEFINE_VALIDATION_ERROR(InvalidChangepoint);
VSTREAM_DEFINE_VALIDATION_ERROR(InvalidConfig);
VSTREAM_DEFINE_VALIDATION_ERROR(MissingRepresentations);
VSTREAM_DEFINE_VALIDATION_ERROR(NonDistributionAttention);
VSTREAM_DEFINE_VALIDATION_ERROR(ScoreOutOfRange);
VSTREAM_DEFINE_VALIDATION_ERROR(DivergedLoss);
VSTREAM_DEFINE_VALIDATION_ERROR(StreamMismatch);
VSTREAM_DEFINE_VALIDATION_ERROR(EmptyTruthSet);
VSTREAM_DEFINE_VALIDATION_ERROR(MissingChangepoint);
VSTREAM_DEFINE_VALIDATION_ERROR(MissingCaption);

#undef VSTREAM_DEFINE_VALIDATION_ERROR

}  // namespace vstream

#endif  // VSTREAM_ERRORS_H_
