#ifndef FACEID_ERRORS_HPP
#define FACEID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace faceid {

// Error categories map onto CLI exit codes: config=2, data=3, numeric=4.
enum class ErrorClass { Config, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }

private:
    ErrorClass cls_;
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct NonSymmetric : Error {
    explicit NonSymmetric(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct BadMagic : ParseError {
    explicit BadMagic(const std::string& what) : ParseError(what) {}
};

struct BadHeader : ParseError {
    explicit BadHeader(const std::string& what) : ParseError(what) {}
};

struct TruncatedData : ParseError {
    explicit TruncatedData(const std::string& what) : ParseError(what) {}
};

struct MissingFile : Error {
    explicit MissingFile(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct InconsistentDims : Error {
    explicit InconsistentDims(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct UnknownLabel : Error {
    explicit UnknownLabel(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct DegenerateData : Error {
    explicit DegenerateData(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct KTooLarge : Error {
    explicit KTooLarge(const std::string& what) : Error(ErrorClass::Config, what) {}
};

struct SingleClass : Error {
    explicit SingleClass(const std::string& what) : Error(ErrorClass::Data, what) {}
};

struct NoSupportVectors : Error {
    explicit NoSupportVectors(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorClass::Config, what) {}
};

} // namespace faceid

#endif
