#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "compovm/access.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

/// A value frozen into a composed implementation. Besides plain values it
/// can reference a sibling composing instance by position (so object graphs
/// built during prototyping survive the freeze), recursively inside arrays.
struct FrozenValue {
  std::variant<Value, int, std::vector<FrozenValue>> v;

  static FrozenValue plain(Value x) { return FrozenValue{std::move(x)}; }
  static FrozenValue def_ref(int idx) { return FrozenValue{idx}; }
  static FrozenValue array(std::vector<FrozenValue> xs) {
    return FrozenValue{std::move(xs)};
  }

  bool is_plain() const { return std::holds_alternative<Value>(v); }
  const Value& as_plain() const { return std::get<Value>(v); }
};

/// How one property of a composing instance deviates from a plain default
/// instantiation of its type. `access` is always present (usually equal to
/// the declared access); at most one of the other three applies.
struct PropertyRefinement {
  AccessSet access;
  int externalLink = -1;  // index of the enclosing type's interface property
  int shareGroup = -1;    // index into ComposedImplementation::groups
  std::optional<FrozenValue> override;
};

struct ComposingTypeSpec {
  std::string defName;
  TypePtr type;
  std::vector<PropertyRefinement> refined;  // one per property of `type`
};

/// A cell shared between inner properties without surfacing on the
/// interface. Such wiring happens during prototyping; it has no text form.
struct ShareGroupSpec {
  TypePtr valueType;
  Value initial;
};

/// Route endpoints by position: def index, or -1 for the composed instance
/// itself (an interface property).
struct RouteSpec {
  int srcDef = -1;
  int srcProp = 0;
  int dstDef = -1;
  int dstProp = 0;
};

struct ComposedImplementation {
  /// Composing instances, referenced children stored before their parents
  /// so instantiation can resolve def refs in one pass.
  std::vector<ComposingTypeSpec> composing;
  std::vector<ShareGroupSpec> groups;
  std::vector<RouteSpec> routes;
};

}  // namespace compovm
