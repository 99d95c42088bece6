#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subot {

enum class ErrorKind {
    MissingFile,
    RaggedRows,
    NonNumericCell,
    NonFiniteValue,
    InvalidArgument,
    WindowTooShort,
    DegenerateSplit,
    LabelSetMismatch,
    KExceedsN,
    ClassTooSmall,
    DimensionMismatch,
    NegativeVariance,
    NumericalUnderflow,
    ZeroMassRow,
    EmptyTrainingSet,
    LengthMismatch,
    InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every recoverable failure raised by the library.
///
/// `line` and `column` are 1-based file positions and are 0 when the error
/// does not originate from parsing.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::size_t line = 0, std::size_t column = 0);

    ErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

protected:
    struct Preformatted {};
    Error(Preformatted, ErrorKind kind, const std::string& what, std::size_t line, std::size_t column);

private:
    ErrorKind kind_;
    std::size_t line_;
    std::size_t column_;
};

/// Wraps an Error raised inside one stage of an adaptation run.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause);

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace subot
