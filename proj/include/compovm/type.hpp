#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "compovm/access.hpp"
#include "compovm/errors.hpp"
#include "compovm/value.hpp"

namespace compovm {

class TypeLoader;
struct NativeInfo;
struct ForeignInfo;
struct ComposedImplementation;

enum class TypeKind {
  Builtin,   // Int32, Float64, Boolean, String, Any
  Array,     // T[] for some element type T
  Native,    // described in code; may carry behavior, a value predicate, or neither
  Foreign,   // adaptor over a host object reached through get/set hooks
  Composed,  // implementation is a wiring of other types
  Variable,  // var<V>: single "value" property of type V
};

enum class Builtin { Int32, Float64, Boolean, String, Any };

inline const char* kind_name(TypeKind k) {
  switch (k) {
    case TypeKind::Builtin: return "builtin";
    case TypeKind::Array: return "array";
    case TypeKind::Native: return "native";
    case TypeKind::Foreign: return "foreign";
    case TypeKind::Composed: return "composed";
    case TypeKind::Variable: return "variable";
  }
  return "?";
}

/// Immutable never changes after construction; Mutable can be written;
/// Bound additionally notifies; External delegates storage to a property of
/// the enclosing instance (only inside composed implementations).
enum class PropertyCategory { Immutable, Mutable, Bound, External };

inline const char* category_name(PropertyCategory c) {
  switch (c) {
    case PropertyCategory::Immutable: return "immutable";
    case PropertyCategory::Mutable: return "mutable";
    case PropertyCategory::Bound: return "bound";
    case PropertyCategory::External: return "external";
  }
  return "?";
}

/// Category is fully determined by the access set: Bound when B is present,
/// Mutable when the value can still change (W or IW), otherwise Immutable
/// (access within {R, IR}).
inline PropertyCategory category_for(AccessSet a) {
  if (a.bound()) return PropertyCategory::Bound;
  if (a.writable() || a.indexed_writable()) return PropertyCategory::Mutable;
  return PropertyCategory::Immutable;
}

/// One interface slot: name, value type, access and (when the type can make
/// instances out of thin air) a default value.
struct PropertyType {
  std::string name;
  TypePtr valueType;
  AccessSet access;
  PropertyCategory category = PropertyCategory::Immutable;
  Value defaultValue;
  bool hasDefault = false;
};

class Type {
 public:
  TypeKind kind() const { return kind_; }
  Builtin builtin() const { return builtin_; }
  const std::string& name() const { return name_; }
  const std::vector<PropertyType>& properties() const { return properties_; }
  int property_count() const { return static_cast<int>(properties_.size()); }

  const PropertyType& property(int index) const {
    if (index < 0 || index >= property_count())
      throw Error(Errc::IndexOutOfBounds,
                  name_ + " has no property #" + std::to_string(index));
    return properties_[static_cast<size_t>(index)];
  }

  /// Name to index, -1 when absent.
  int find_property(const std::string& propName) const {
    for (size_t i = 0; i < properties_.size(); ++i)
      if (properties_[i].name == propName) return static_cast<int>(i);
    return -1;
  }

  /// Name to index, throwing UnknownProperty when absent.
  int property_index(const std::string& propName) const {
    int i = find_property(propName);
    if (i < 0)
      throw Error(Errc::UnknownProperty, name_ + " has no property '" + propName + "'");
    return i;
  }

  /// Element type of an array or of a var<V> wrapper.
  const TypePtr& element() const { return element_; }

  const std::vector<TypePtr>& supertypes() const { return supertypes_; }
  const std::function<bool(const Value&)>& domain() const { return domain_; }

  const std::shared_ptr<const NativeInfo>& native_info() const { return native_; }
  const std::shared_ptr<const ForeignInfo>& foreign_info() const { return foreign_; }
  const std::shared_ptr<const ComposedImplementation>& composed_impl() const { return composed_; }

  /// A component can be instantiated with no information from outside: it
  /// has an implementation and every property carries a default.
  bool is_component() const { return component_; }

  /// Loader that owns this type's registration. Derived types (T[], var<T>)
  /// are cached there so they stay identical across child loaders.
  std::shared_ptr<TypeLoader> defining_loader() const { return loader_.lock(); }
  void bind_loader(const std::shared_ptr<TypeLoader>& l) const { loader_ = l; }

  /// Canonical one-string interface summary, used by the type listing and
  /// by tests that pin down type immutability.
  std::string describe() const {
    std::string s = name_ + " (" + kind_name(kind_);
    if (component_) s += ", component";
    s += ")\n";
    for (const auto& p : properties_) {
      s += "  [" + p.access.to_string() + "] " + p.valueType->name() + " " + p.name;
      if (p.hasDefault) s += " = " + to_literal(p.defaultValue);
      s += "  (";
      s += category_name(p.category);
      s += ")\n";
    }
    return s;
  }

  static TypePtr make_builtin(Builtin b, std::string name) {
    auto t = std::shared_ptr<Type>(new Type());
    t->kind_ = TypeKind::Builtin;
    t->builtin_ = b;
    t->name_ = std::move(name);
    return t;
  }

  static TypePtr make_array(TypePtr element, std::string name) {
    auto t = std::shared_ptr<Type>(new Type());
    t->kind_ = TypeKind::Array;
    t->name_ = std::move(name);
    t->element_ = std::move(element);
    return t;
  }

  static TypePtr make_variable(TypePtr element, std::string name, PropertyType valueProp) {
    auto t = std::shared_ptr<Type>(new Type());
    t->kind_ = TypeKind::Variable;
    t->name_ = std::move(name);
    t->element_ = std::move(element);
    t->component_ = valueProp.hasDefault;
    t->properties_.push_back(std::move(valueProp));
    return t;
  }

  static TypePtr make_native(std::string name, std::vector<PropertyType> props,
                             std::shared_ptr<const NativeInfo> info, bool instantiable,
                             std::vector<TypePtr> supertypes,
                             std::function<bool(const Value&)> domain) {
    check_unique(props);
    auto t = std::shared_ptr<Type>(new Type());
    t->kind_ = TypeKind::Native;
    t->name_ = std::move(name);
    t->properties_ = std::move(props);
    t->native_ = std::move(info);
    t->supertypes_ = std::move(supertypes);
    t->domain_ = std::move(domain);
    t->component_ = instantiable && all_defaulted(t->properties_);
    return t;
  }

  static TypePtr make_foreign(std::string name, std::vector<PropertyType> props,
                              std::shared_ptr<const ForeignInfo> info) {
    check_unique(props);
    auto t = std::shared_ptr<Type>(new Type());
    t->kind_ = TypeKind::Foreign;
    t->name_ = std::move(name);
    t->properties_ = std::move(props);
    t->foreign_ = std::move(info);
    t->component_ = all_defaulted(t->properties_);
    return t;
  }

  static TypePtr make_composed(std::string name, std::vector<PropertyType> props,
                               std::shared_ptr<const ComposedImplementation> impl) {
    check_unique(props);
    auto t = std::shared_ptr<Type>(new Type());
    t->kind_ = TypeKind::Composed;
    t->name_ = std::move(name);
    t->properties_ = std::move(props);
    t->composed_ = std::move(impl);
    t->component_ = all_defaulted(t->properties_);
    return t;
  }

 private:
  Type() = default;

  static bool all_defaulted(const std::vector<PropertyType>& props) {
    for (const auto& p : props)
      if (!p.hasDefault) return false;
    return true;
  }

  static void check_unique(const std::vector<PropertyType>& props) {
    for (size_t i = 0; i < props.size(); ++i)
      for (size_t j = i + 1; j < props.size(); ++j)
        if (props[i].name == props[j].name)
          throw Error(Errc::NameConflict, "duplicate property name '" + props[i].name + "'");
  }

  TypeKind kind_ = TypeKind::Builtin;
  Builtin builtin_ = Builtin::Any;
  std::string name_;
  std::vector<PropertyType> properties_;
  TypePtr element_;
  std::vector<TypePtr> supertypes_;
  std::function<bool(const Value&)> domain_;
  std::shared_ptr<const NativeInfo> native_;
  std::shared_ptr<const ForeignInfo> foreign_;
  std::shared_ptr<const ComposedImplementation> composed_;
  bool component_ = false;
  mutable std::weak_ptr<TypeLoader> loader_;
};

inline bool type_is_any(const TypePtr& t) {
  return t->kind() == TypeKind::Builtin && t->builtin() == Builtin::Any;
}

/// Nominal conformance: identity, Any as the universal sink, or a declared
/// supertype chain. No numeric coercion of any kind.
inline bool type_conforms(const TypePtr& src, const TypePtr& dst) {
  if (src == dst) return true;
  if (type_is_any(dst)) return true;
  for (const auto& s : src->supertypes())
    if (type_conforms(s, dst)) return true;
  return false;
}

/// Does a value belong to a type's domain? Builtins check the tag, arrays
/// check elementwise, predicate types ask their predicate, and instance
/// types check the instance's type nominally.
inline bool value_conforms(const Value& v, const TypePtr& t) {
  switch (t->kind()) {
    case TypeKind::Builtin:
      switch (t->builtin()) {
        case Builtin::Any: return true;
        case Builtin::Int32: return v.is_int();
        case Builtin::Float64: return v.is_float();
        case Builtin::Boolean: return v.is_bool();
        case Builtin::String: return v.is_string();
      }
      return false;
    case TypeKind::Array: {
      if (!v.is_array()) return false;
      for (const auto& e : v.elements())
        if (!value_conforms(e, t->element())) return false;
      return true;
    }
    default:
      break;
  }
  if (t->domain()) return t->domain()(v);
  if (!v.is_instance()) return false;
  TypePtr it = instance_type(v.as_instance());
  return it && type_conforms(it, t);
}

/// The value an uninitialized slot of this type starts from. Only builtins
/// and arrays have one; instance-valued types must be given a value.
inline std::optional<Value> zero_value(const TypePtr& t) {
  switch (t->kind()) {
    case TypeKind::Builtin:
      switch (t->builtin()) {
        case Builtin::Int32: return Value(int32_t{0});
        case Builtin::Float64: return Value(0.0);
        case Builtin::Boolean: return Value(false);
        case Builtin::String: return Value(std::string());
        case Builtin::Any: return Value(int32_t{0});
      }
      return std::nullopt;
    case TypeKind::Array:
      return Value(std::vector<Value>{});
    default:
      return std::nullopt;
  }
}

/// Validating PropertyType constructor: access must be coherent, indexed
/// flags need an array-typed value, and a supplied default must conform.
inline PropertyType make_property(std::string name, TypePtr valueType, AccessSet access,
                                  std::optional<Value> defaultValue = std::nullopt) {
  access.ensure_valid();
  if ((access.indexed_readable() || access.indexed_writable()) &&
      valueType->kind() != TypeKind::Array)
    throw Error(Errc::InvalidAccess,
                "indexed access on non-array property '" + name + "' of type " +
                    valueType->name());
  PropertyType p;
  p.name = std::move(name);
  p.valueType = std::move(valueType);
  p.access = access;
  p.category = category_for(access);
  if (defaultValue) {
    if (!value_conforms(*defaultValue, p.valueType))
      throw Error(Errc::TypeMismatch, "default for '" + p.name + "' does not fit " +
                                          p.valueType->name());
    p.defaultValue = std::move(*defaultValue);
    p.hasDefault = true;
  }
  return p;
}

}  // namespace compovm
