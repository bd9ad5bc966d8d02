#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace compovm {

enum class Errc {
  UnresolvedType,
  UnknownProperty,
  UnknownName,
  AccessViolation,
  TypeMismatch,
  IndexOutOfBounds,
  NameConflict,
  DuplicateInit,
  MissingDefault,
  NotAComponent,
  CycleDetected,
  InvalidAccess,
  ValidationFailed,
  NotSerializable,
  ShapeMismatch,
  SyntaxError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::UnresolvedType:   return "UnresolvedType";
    case Errc::UnknownProperty:  return "UnknownProperty";
    case Errc::UnknownName:      return "UnknownName";
    case Errc::AccessViolation:  return "AccessViolation";
    case Errc::TypeMismatch:     return "TypeMismatch";
    case Errc::IndexOutOfBounds: return "IndexOutOfBounds";
    case Errc::NameConflict:     return "NameConflict";
    case Errc::DuplicateInit:    return "DuplicateInit";
    case Errc::MissingDefault:   return "MissingDefault";
    case Errc::NotAComponent:    return "NotAComponent";
    case Errc::CycleDetected:    return "CycleDetected";
    case Errc::InvalidAccess:    return "InvalidAccess";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::NotSerializable:  return "NotSerializable";
    case Errc::ShapeMismatch:    return "ShapeMismatch";
    case Errc::SyntaxError:      return "SyntaxError";
  }
  return "Error";
}

/// Runtime error carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Parse error with a 1-based source location.
class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, const std::string& msg)
      : Error(Errc::SyntaxError,
              "line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// One prototype validation fault. Faults are data, not exceptions; a
/// validation report is a list of them.
struct Fault {
  Errc code;
  std::string where;    // property, DEF or route the fault refers to
  std::string message;
};

inline std::string to_string(const Fault& f) {
  std::string s = errc_name(f.code);
  if (!f.where.empty()) s += " at " + f.where;
  s += ": " + f.message;
  return s;
}

/// Thrown when a prototype with a non-empty validation report is frozen.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Fault> report)
      : Error(Errc::ValidationFailed, summarize(report)), report_(std::move(report)) {}

  const std::vector<Fault>& report() const { return report_; }

 private:
  static std::string summarize(const std::vector<Fault>& report) {
    if (report.empty()) return "invalid prototype";
    std::string s = to_string(report.front());
    if (report.size() > 1) s += " (+" + std::to_string(report.size() - 1) + " more)";
    return s;
  }

  std::vector<Fault> report_;
};

}  // namespace compovm
