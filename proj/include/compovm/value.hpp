#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace compovm {

class Instance;
class Type;

using InstancePtr = std::shared_ptr<Instance>;
using TypePtr = std::shared_ptr<const Type>;

class Value;

/// Array values are immutable snapshots; element writes copy the vector.
/// This makes a Value freely shareable between cells, defaults and traces.
using ArrayPtr = std::shared_ptr<const std::vector<Value>>;

/// Tagged runtime value. Scalars and strings compare structurally, arrays
/// compare elementwise, instances compare by identity.
class Value {
 public:
  Value() : v_(int32_t{0}) {}
  Value(int32_t i) : v_(i) {}
  Value(double d) : v_(d) {}
  Value(bool b) : v_(b) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(ArrayPtr a) : v_(std::move(a)) {}
  Value(std::vector<Value> elems)
      : v_(std::make_shared<const std::vector<Value>>(std::move(elems))) {}
  Value(InstancePtr p) : v_(std::move(p)) {}

  bool is_int() const { return std::holds_alternative<int32_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_array() const { return std::holds_alternative<ArrayPtr>(v_); }
  bool is_instance() const { return std::holds_alternative<InstancePtr>(v_); }

  int32_t as_int() const { return std::get<int32_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }
  const ArrayPtr& as_array() const { return std::get<ArrayPtr>(v_); }
  const InstancePtr& as_instance() const { return std::get<InstancePtr>(v_); }

  const std::vector<Value>& elements() const {
    static const std::vector<Value> kEmpty;
    const ArrayPtr& a = as_array();
    return a ? *a : kEmpty;
  }

  bool operator==(const Value& o) const {
    if (v_.index() != o.v_.index()) return false;
    if (is_array()) {
      const auto& a = elements();
      const auto& b = o.elements();
      if (a.size() != b.size()) return false;
      for (size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i])) return false;
      return true;
    }
    return v_ == o.v_;
  }
  bool operator!=(const Value& o) const { return !(*this == o); }

 private:
  std::variant<int32_t, double, bool, std::string, ArrayPtr, InstancePtr> v_;
};

/// Runtime type of an instance value. Defined with Instance in runtime.hpp.
TypePtr instance_type(const InstancePtr& p);

/// Shortest decimal form that round-trips to the same double. Integral
/// results keep a trailing ".0" so the literal stays float-typed.
inline std::string format_double(double d) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, d);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == d) break;
  }
  std::string s(buf);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

inline std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

/// Literal form used by the text format and by diagnostics. Instances have
/// no literal syntax and print as an address-tagged placeholder.
inline std::string to_literal(const Value& v) {
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_float()) return format_double(v.as_float());
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  if (v.is_string()) return quote_string(v.as_string());
  if (v.is_array()) {
    std::string s = "[";
    const auto& elems = v.elements();
    for (size_t i = 0; i < elems.size(); ++i) {
      if (i) s += " ";
      s += to_literal(elems[i]);
    }
    s += "]";
    return s;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%p", static_cast<const void*>(v.as_instance().get()));
  return std::string("<instance@") + buf + ">";
}

}  // namespace compovm
