#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "compovm/access.hpp"
#include "compovm/errors.hpp"
#include "compovm/loader.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

class Space;
class Instance;

struct PropertyDecl {
  std::string name;
  std::string valueTypeName;
  std::string access;  // flag letters, e.g. "RWB" or "RB IR"
};

class BeanContext;

/// The hook surface of a native component. init runs exactly once per type,
/// while the type is being created, to capture property defaults. on_set
/// runs after every accepted write to one of the instance's properties.
class Behavior {
 public:
  virtual ~Behavior() = default;
  virtual void init(BeanContext&) {}
  virtual void on_set(BeanContext&, int /*prop*/, const Value& /*oldValue*/,
                      const Value& /*newValue*/) {}
};

using BehaviorFactory = std::function<std::unique_ptr<Behavior>()>;

/// Property window behaviors see. During type creation it records defaults;
/// on a live instance it reads and writes the instance's cells through the
/// internal access path. Method bodies live in runtime.hpp; include
/// compovm.hpp (or runtime.hpp) in any file that uses them.
class BeanContext {
 public:
  /// Records a property default during type creation. On a live instance it
  /// has no effect: the properties already carry their defaults.
  void init_property_value(const std::string& name, const Value& v);

  Value get(int prop) const;
  Value get(const std::string& name) const;
  void set(int prop, const Value& v);
  void set(const std::string& name, const Value& v);
  int index_of(const std::string& name) const;
  int property_count() const;

 private:
  friend class Space;
  friend TypePtr type_from_descriptor(TypeLoader& loader, const struct NativeDescriptor& d);

  BeanContext() = default;

  // Type-creation capture state; null on live instances.
  const std::vector<PropertyType>* captureProps_ = nullptr;
  std::vector<std::optional<Value>>* captureOut_ = nullptr;

  // Live instance state; null during capture.
  Space* space_ = nullptr;
  Instance* self_ = nullptr;
};

/// A hardcoded type described in code. With a behavior factory the
/// descriptor yields an instantiable component; without one it declares a
/// value type (a membership predicate and/or an abstract supertype) and may
/// not declare properties, since nothing could capture their defaults.
struct NativeDescriptor {
  std::string typeName;
  std::vector<PropertyDecl> properties;
  BehaviorFactory behavior;
  std::function<bool(const Value&)> domain;
  std::vector<std::string> supertypes;
};

struct NativeInfo {
  BehaviorFactory behavior;
};

/// Hooks mapping a declared property shape onto some host object. `watch`
/// is optional: when present it is called once per bound property at
/// instantiation to register a host-side change callback.
struct ForeignObjectView {
  std::vector<PropertyDecl> properties;
  std::function<Value(const std::string&)> get;
  std::function<void(const std::string&, const Value&)> set;
  std::function<void(const std::string&, std::function<void()>)> watch;
};

struct ForeignInfo {
  ForeignObjectView view;
};

inline std::vector<PropertyType> resolve_decls(TypeLoader& loader,
                                               const std::vector<PropertyDecl>& decls) {
  std::vector<PropertyType> props;
  props.reserve(decls.size());
  for (const auto& d : decls)
    props.push_back(make_property(d.name, loader.resolve(d.valueTypeName),
                                  parse_access(d.access)));
  return props;
}

/// Creates and registers a native type. The behavior is instantiated once,
/// here, and its init captures every property default; instances made later
/// never repeat that step.
inline TypePtr type_from_descriptor(TypeLoader& loader, const NativeDescriptor& d) {
  if (loader.bound(d.typeName))
    throw Error(Errc::NameConflict, "type name '" + d.typeName + "' is already bound");
  std::vector<PropertyType> props = resolve_decls(loader, d.properties);
  std::vector<TypePtr> supers;
  for (const auto& s : d.supertypes) supers.push_back(loader.resolve(s));

  if (d.behavior) {
    std::vector<std::optional<Value>> captured(props.size());
    BeanContext ctx;
    ctx.captureProps_ = &props;
    ctx.captureOut_ = &captured;
    d.behavior()->init(ctx);
    for (size_t i = 0; i < props.size(); ++i) {
      if (!captured[i])
        throw Error(Errc::MissingDefault, d.typeName + "." + props[i].name +
                                              " left uninitialized by init");
      props[i].defaultValue = std::move(*captured[i]);
      props[i].hasDefault = true;
    }
  } else if (!props.empty()) {
    throw Error(Errc::MissingDefault,
                d.typeName + " declares properties but no behavior to capture defaults");
  }

  auto info = std::make_shared<NativeInfo>(NativeInfo{d.behavior});
  TypePtr t = Type::make_native(d.typeName, std::move(props), std::move(info),
                                static_cast<bool>(d.behavior), std::move(supers), d.domain);
  loader.register_type(t);
  return t;
}

/// Adapts a host object into a component type. Each declared property is
/// read once to spot-check the shape; those reads become the defaults.
inline TypePtr wrap_foreign(TypeLoader& loader, const std::string& name,
                            const ForeignObjectView& view) {
  if (loader.bound(name))
    throw Error(Errc::NameConflict, "type name '" + name + "' is already bound");
  if (!view.get)
    throw Error(Errc::ShapeMismatch, name + ": foreign view lacks a getter");
  std::vector<PropertyType> props = resolve_decls(loader, view.properties);
  for (auto& p : props) {
    if ((p.access.writable() || p.access.indexed_writable()) && !view.set)
      throw Error(Errc::ShapeMismatch,
                  name + "." + p.name + " is writable but the view lacks a setter");
    Value v = view.get(p.name);
    if (!value_conforms(v, p.valueType))
      throw Error(Errc::ShapeMismatch, name + "." + p.name + ": host value " + to_literal(v) +
                                           " does not fit " + p.valueType->name());
    p.defaultValue = std::move(v);
    p.hasDefault = true;
  }
  auto info = std::make_shared<ForeignInfo>(ForeignInfo{view});
  TypePtr t = Type::make_foreign(name, std::move(props), std::move(info));
  loader.register_type(t);
  return t;
}

}  // namespace compovm
