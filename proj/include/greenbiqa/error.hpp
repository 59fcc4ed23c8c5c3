#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace greenbiqa {

// Every failure raised by the library derives from Error so callers can catch
// one type; the subclasses identify the contract that was violated.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GREENBIQA_DEFINE_ERROR(Name)         \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  };

GREENBIQA_DEFINE_ERROR(GeometryError)
GREENBIQA_DEFINE_ERROR(FitError)
GREENBIQA_DEFINE_ERROR(DataError)
GREENBIQA_DEFINE_ERROR(ConfigError)
GREENBIQA_DEFINE_ERROR(DecodeError)
GREENBIQA_DEFINE_ERROR(UnsupportedFormatError)
GREENBIQA_DEFINE_ERROR(FormatError)
GREENBIQA_DEFINE_ERROR(CorruptionError)
GREENBIQA_DEFINE_ERROR(ManifestError)
GREENBIQA_DEFINE_ERROR(ParseError)
GREENBIQA_DEFINE_ERROR(SplitError)
GREENBIQA_DEFINE_ERROR(IoError)
GREENBIQA_DEFINE_ERROR(DegenerateInputError)

#undef GREENBIQA_DEFINE_ERROR

// Wraps an error raised inside a training or inference stage with the stage
// name, e.g. "[rft] count 900 exceeds 705 dimensions".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, std::exception_ptr cause = nullptr)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)), cause_(std::move(cause)) {}
  const std::string& stage() const noexcept { return stage_; }
  // The original exception, for callers that dispatch on its type.
  const std::exception_ptr& cause() const noexcept { return cause_; }
  [[noreturn]] void rethrow_cause() const {
    if (cause_) std::rethrow_exception(cause_);
    throw *this;
  }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

template <typename F>
decltype(auto) with_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), std::current_exception());
  }
}

}  // namespace greenbiqa
