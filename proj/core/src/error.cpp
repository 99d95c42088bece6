#include "subot/error.hpp"

namespace subot {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::LabelSetMismatch: return "LabelSetMismatch";
    case ErrorKind::KExceedsN: return "KExceedsN";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NegativeVariance: return "NegativeVariance";
    case ErrorKind::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorKind::ZeroMassRow: return "ZeroMassRow";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

namespace {

std::string format_message(ErrorKind kind, const std::string& message, std::size_t line, std::size_t column) {
    std::string out(to_string(kind));
    if (line > 0) {
        out += " (line " + std::to_string(line);
        if (column > 0) out += ", column " + std::to_string(column);
        out += ")";
    }
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(format_message(kind, message, line, column)), kind_(kind), line_(line), column_(column) {}

Error::Error(Preformatted, ErrorKind kind, const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(what), kind_(kind), line_(line), column_(column) {}

StageError::StageError(std::string stage, const Error& cause)
    : Error(Preformatted{}, cause.kind(), "[" + stage + "] " + cause.what(), cause.line(), cause.column()),
      stage_(std::move(stage)) {}

}  // namespace subot
