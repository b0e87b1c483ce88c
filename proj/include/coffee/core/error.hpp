#pragma once

#include <stdexcept>
#include <string>

namespace coffee {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define COFFEE_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                \
      public:                                                                  \
        using Error::Error;                                                    \
    }

COFFEE_DEFINE_ERROR(DimensionError);
COFFEE_DEFINE_ERROR(NumericError);
COFFEE_DEFINE_ERROR(EmptyInputError);
COFFEE_DEFINE_ERROR(ContractError);
COFFEE_DEFINE_ERROR(CheckError);
COFFEE_DEFINE_ERROR(ParseError);
COFFEE_DEFINE_ERROR(LabelError);
COFFEE_DEFINE_ERROR(IntegrityError);
COFFEE_DEFINE_ERROR(SelectionError);
COFFEE_DEFINE_ERROR(SampleError);
COFFEE_DEFINE_ERROR(ProtocolError);
COFFEE_DEFINE_ERROR(StrategyError);
COFFEE_DEFINE_ERROR(IoError);

#undef COFFEE_DEFINE_ERROR

// Transport failure after the retry budget is spent.
class ServiceError : public Error {
  public:
    ServiceError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}

    [[nodiscard]] int attempts() const noexcept { return attempts_; }

  private:
    int attempts_;
};

} // namespace coffee
