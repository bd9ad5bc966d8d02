#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "compovm/access.hpp"
#include "compovm/errors.hpp"
#include "compovm/loader.hpp"
#include "compovm/runtime.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

/// A live, typed variable standing in for one property while a composition
/// is being designed. Sharing a prototype means pointing several property
/// slots at its cell; whatever is in the cell at freeze time becomes part of
/// the composed type.
struct PropertyPrototype {
  std::string name;
  TypePtr valueType;
  AccessSet access;  // effective rights, narrowed by deny()
  InstancePtr variable;  // var<valueType> holding the live value; may be null
  std::optional<Value> declaredDefault;
  bool isInterface = false;
  int interfaceIndex = -1;
};

using PropertyPrototypePtr = std::shared_ptr<PropertyPrototype>;

/// One DEF inside a prototype: a live instance of a component type plus the
/// property prototypes backing its slots. `own[i]` is the prototype created
/// for slot i at add time; `slots[i]` is whichever prototype currently backs
/// it (a shared one after share()).
struct ComposingInstance {
  std::string defName;
  int defIndex = -1;
  TypePtr type;
  InstancePtr live;
  std::vector<PropertyPrototypePtr> own;
  std::vector<PropertyPrototypePtr> slots;

  PropertyPrototypePtr slot(const std::string& prop) const {
    int i = type->property_index(prop);
    return slots[static_cast<size_t>(i)];
  }
};

/// A composition in progress: interface property prototypes, composing
/// instances, sharing and routes, all live and pokeable. freeze() (in the
/// composer module) turns it into an immutable composed Type.
class Prototype {
 public:
  Prototype(Space& space, std::shared_ptr<TypeLoader> loader, std::string name)
      : space_(space), loader_(std::move(loader)), name_(std::move(name)) {}

  Prototype(const Prototype&) = delete;
  Prototype& operator=(const Prototype&) = delete;

  Space& space() { return space_; }
  const std::string& name() const { return name_; }
  const std::shared_ptr<TypeLoader>& loader() const { return loader_; }

  const std::vector<PropertyPrototypePtr>& interface_props() const { return interface_; }
  const std::vector<std::unique_ptr<ComposingInstance>>& composing() const {
    return composing_;
  }

  struct RouteSym {
    std::string srcName, srcProp, dstName, dstProp;
  };
  const std::vector<RouteSym>& routes() const { return routes_; }

  PropertyPrototypePtr find_interface(const std::string& n) const {
    for (const auto& p : interface_)
      if (p->name == n) return p;
    return nullptr;
  }

  ComposingInstance* find_composing(const std::string& n) const {
    for (const auto& c : composing_)
      if (c->defName == n) return c.get();
    return nullptr;
  }

  /// Declares an interface property. If no default is given one is
  /// synthesized when the value type allows it; otherwise the prototype has
  /// no live variable and freezing reports the missing value.
  PropertyPrototypePtr add_interface_property(const std::string& propName,
                                              const TypePtr& valueType, AccessSet access,
                                              std::optional<Value> defaultValue = {}) {
    check_fresh_name(propName);
    // Validates the flag combination and default conformance up front.
    make_property(propName, valueType, access, defaultValue);
    auto p = std::make_shared<PropertyPrototype>();
    p->name = propName;
    p->valueType = valueType;
    p->access = access;
    p->declaredDefault = defaultValue;
    p->isInterface = true;
    p->interfaceIndex = static_cast<int>(interface_.size());
    TypePtr varT = loader_->synthesize_variable(valueType);
    if (defaultValue) {
      p->variable = space_.instantiate_with_value(varT, *defaultValue);
    } else if (varT->is_component()) {
      p->variable = space_.instantiate(varT);
    }
    if (p->variable) space_.set_instance_access(p->variable, 0, access);
    interface_.push_back(p);
    return interface_.back();
  }

  PropertyPrototypePtr add_interface_property(const std::string& propName,
                                              const std::string& valueTypeName,
                                              AccessSet access,
                                              std::optional<Value> defaultValue = {}) {
    return add_interface_property(propName, loader_->resolve(valueTypeName), access,
                                  std::move(defaultValue));
  }

  /// Adds a composing instance of a component type. Every slot starts on a
  /// fresh property prototype seeded with the type's default.
  ComposingInstance& add_component(const std::string& defName, const TypePtr& type) {
    check_fresh_name(defName);
    if (!type->is_component())
      throw Error(Errc::NotAComponent, type->name() + " is not a component");
    auto c = std::make_unique<ComposingInstance>();
    c->defName = defName;
    c->defIndex = static_cast<int>(composing_.size());
    c->type = type;
    int n = type->property_count();
    InstanceSeed seed;
    seed.cells.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const PropertyType& pt = type->property(i);
      auto p = std::make_shared<PropertyPrototype>();
      p->name = defName + "." + pt.name;
      p->valueType = pt.valueType;
      p->access = pt.access;
      p->declaredDefault = pt.defaultValue;
      TypePtr varT = loader_->synthesize_variable(pt.valueType);
      p->variable = space_.instantiate_with_value(varT, pt.defaultValue);
      space_.set_instance_access(p->variable, 0, pt.access);
      c->own.push_back(p);
      seed.cells[static_cast<size_t>(i)] = space_.cell_of(p->variable, 0);
    }
    c->slots = c->own;
    c->live = space_.instantiate_seeded(type, &seed);
    composing_.push_back(std::move(c));
    return *composing_.back();
  }

  ComposingInstance& add_component(const std::string& defName, const std::string& typeName) {
    return add_component(defName, loader_->resolve(typeName));
  }

  /// Rebinds a slot onto another property prototype so both read and write
  /// one cell. The source keeps its own rights; the slot keeps its own.
  void share_property(ComposingInstance& c, const std::string& propName,
                      const PropertyPrototypePtr& source) {
    int idx = c.type->property_index(propName);
    const PropertyType& pt = c.type->property(idx);
    if (!source || !source->variable)
      throw Error(Errc::MissingDefault,
                  "property prototype " + (source ? source->name : std::string("<null>")) +
                      " has no live value to share");
    if (!type_conforms(source->valueType, pt.valueType))
      throw Error(Errc::TypeMismatch, source->valueType->name() + " does not conform to " +
                                          pt.valueType->name() + " (" + c.defName + "." +
                                          propName + ")");
    space_.rebind_cell(c.live, idx, space_.cell_of(source->variable, 0));
    c.slots[static_cast<size_t>(idx)] = source;
  }

  /// Client-style write through a slot's effective rights.
  void set_field(ComposingInstance& c, const std::string& propName, const Value& v) {
    space_.set(c.live, c.type->property_index(propName), v);
  }

  /// Client-style write to an interface prototype's value.
  void set_field(const PropertyPrototypePtr& p, const Value& v) {
    if (!p->variable)
      throw Error(Errc::MissingDefault, p->name + " has no live variable");
    space_.set(p->variable, 0, v);
  }

  /// Composition-time override: bypasses access rights (wiring is not a
  /// client write) but keeps conformance and notification.
  void compose_field(ComposingInstance& c, const std::string& propName, const Value& v) {
    space_.compose_write(c.live, c.type->property_index(propName), v);
  }

  /// Stores a child instance into an instance-valued slot, keeping the
  /// containment graph acyclic.
  void link_child(ComposingInstance& parent, const std::string& propName,
                  const std::string& childDefName) {
    ComposingInstance* child = find_composing(childDefName);
    if (!child) throw Error(Errc::UnknownName, "no composing instance named " + childDefName);
    int idx = parent.type->property_index(propName);
    const PropertyType& pt = parent.type->property(idx);
    if (!type_conforms(child->type, pt.valueType))
      throw Error(Errc::TypeMismatch, child->type->name() + " does not conform to " +
                                          pt.valueType->name() + " (" + parent.defName + "." +
                                          propName + ")");
    if (reaches(child->defIndex, parent.defIndex))
      throw Error(Errc::CycleDetected, "linking " + parent.defName + "." + propName + " to " +
                                           childDefName + " would close a containment cycle");
    space_.compose_write(parent.live, idx, Value(child->live));
  }

  void add_route(const std::string& srcName, const std::string& srcProp,
                 const std::string& dstName, const std::string& dstProp) {
    auto [src, srcIdx] = endpoint(srcName, srcProp);
    auto [dst, dstIdx] = endpoint(dstName, dstProp);
    space_.add_route(src, srcIdx, dst, dstIdx);
    routes_.push_back({srcName, srcProp, dstName, dstProp});
  }

  /// Revokes rights on an interface prototype. Narrowing is permanent and
  /// takes effect immediately.
  void restrict_access(const PropertyPrototypePtr& p, AccessSet denied) {
    AccessSet eff = narrow_access(p->access, denied);
    p->access = eff;
    if (p->variable) space_.set_instance_access(p->variable, 0, eff);
  }

  /// Revokes rights on a composing slot.
  void restrict_access(ComposingInstance& c, const std::string& propName, AccessSet denied) {
    int idx = c.type->property_index(propName);
    AccessSet eff = narrow_access(c.live->access(idx), denied);
    space_.set_instance_access(c.live, idx, eff);
    c.own[static_cast<size_t>(idx)]->access = eff;
    if (c.own[static_cast<size_t>(idx)]->variable)
      space_.set_instance_access(c.own[static_cast<size_t>(idx)]->variable, 0, eff);
  }

  /// Reads a live value the way a client would (R required).
  Value get(const std::string& name, const std::string& prop) {
    if (PropertyPrototypePtr p = find_interface(name)) {
      if (!prop.empty() && prop != "value")
        throw Error(Errc::UnknownProperty, name + " has no property " + prop);
      if (!p->variable) throw Error(Errc::MissingDefault, name + " has no live variable");
      return space_.get(p->variable, 0);
    }
    if (ComposingInstance* c = find_composing(name))
      return space_.get(c->live, c->type->property_index(prop));
    throw Error(Errc::UnknownName, "no interface property or composing instance named " + name);
  }

  /// Everything that must hold before the prototype can freeze into a
  /// component type. Returns an empty report when it can.
  std::vector<Fault> validate() const {
    std::vector<Fault> faults;
    if (name_.empty() || !valid_qname(name_))
      faults.push_back({Errc::ValidationFailed, "name",
                        "'" + name_ + "' is not a usable type name"});
    for (const auto& p : interface_) {
      if (!p->variable)
        faults.push_back({Errc::NotAComponent, p->name,
                          "no default value and none can be synthesized for " +
                              p->valueType->name()});
    }
    std::vector<int> color(composing_.size(), 0);
    auto edges = containment_edges();
    for (size_t d = 0; d < composing_.size(); ++d) {
      if (color[d] == 0 && has_cycle(static_cast<int>(d), edges, color)) {
        faults.push_back({Errc::CycleDetected, composing_[d]->defName,
                          "containment graph has a cycle"});
        break;
      }
    }
    for (const auto& c : composing_) {
      for (int i = 0; i < c->type->property_count(); ++i) {
        const auto& slot = c->slots[static_cast<size_t>(i)];
        if (slot != c->own[static_cast<size_t>(i)] &&
            !type_conforms(slot->valueType, c->type->property(i).valueType))
          faults.push_back({Errc::TypeMismatch, c->defName + "." + c->type->property(i).name,
                            "shared prototype " + slot->name + " no longer conforms"});
      }
    }
    for (const auto& r : routes_) {
      std::string where =
          "route " + r.srcName + "." + r.srcProp + " -> " + r.dstName + "." + r.dstProp;
      try {
        auto [src, srcIdx] = endpoint_const(r.srcName, r.srcProp);
        auto [dst, dstIdx] = endpoint_const(r.dstName, r.dstProp);
        if (!src->access(srcIdx).bound())
          faults.push_back({Errc::AccessViolation, where, "source is not bound"});
        if (!dst->access(dstIdx).writable())
          faults.push_back({Errc::AccessViolation, where, "target is not writable"});
        if (!type_conforms(src->type()->property(srcIdx).valueType,
                           dst->type()->property(dstIdx).valueType))
          faults.push_back({Errc::TypeMismatch, where, "endpoint types do not conform"});
      } catch (const Error& e) {
        faults.push_back({e.code(), where, e.what()});
      }
    }
    return faults;
  }

  /// Containment edges parent -> child derived from the instance values
  /// currently held by composing slots (directly or inside arrays).
  std::vector<std::set<int>> containment_edges() const {
    std::vector<std::set<int>> edges(composing_.size());
    for (size_t d = 0; d < composing_.size(); ++d) {
      const auto& c = *composing_[d];
      for (int i = 0; i < c.type->property_count(); ++i) {
        Value v = space_.peek(c.live, i);
        collect_children(v, edges[d]);
      }
    }
    return edges;
  }

  int def_index_of(const InstancePtr& inst) const {
    for (size_t d = 0; d < composing_.size(); ++d)
      if (composing_[d]->live == inst) return static_cast<int>(d);
    return -1;
  }

 private:
  void check_fresh_name(const std::string& n) {
    if (n.empty()) throw Error(Errc::NameConflict, "empty name");
    if (find_interface(n) || find_composing(n))
      throw Error(Errc::NameConflict, "'" + n + "' is already used in this prototype");
  }

  std::pair<InstancePtr, int> endpoint(const std::string& name, const std::string& prop) {
    return endpoint_const(name, prop);
  }

  std::pair<InstancePtr, int> endpoint_const(const std::string& name,
                                             const std::string& prop) const {
    if (PropertyPrototypePtr p = find_interface(name)) {
      if (prop != "value")
        throw Error(Errc::UnknownProperty,
                    "interface endpoint " + name + " must use property 'value'");
      if (!p->variable) throw Error(Errc::MissingDefault, name + " has no live variable");
      return {p->variable, 0};
    }
    if (ComposingInstance* c = find_composing(name))
      return {c->live, c->type->property_index(prop)};
    throw Error(Errc::UnknownName, "no interface property or composing instance named " + name);
  }

  void collect_children(const Value& v, std::set<int>& out) const {
    if (v.is_instance()) {
      int d = def_index_of(v.as_instance());
      if (d >= 0) out.insert(d);
    } else if (v.is_array()) {
      for (const Value& e : v.elements()) collect_children(e, out);
    }
  }

  /// True if `to` is reachable from `from` over the current containment
  /// edges (used to refuse cycle-closing links).
  bool reaches(int from, int to) const {
    if (from == to) return true;
    auto edges = containment_edges();
    std::vector<char> seen(composing_.size(), 0);
    std::vector<int> stack{from};
    while (!stack.empty()) {
      int d = stack.back();
      stack.pop_back();
      if (d == to) return true;
      if (seen[static_cast<size_t>(d)]) continue;
      seen[static_cast<size_t>(d)] = 1;
      for (int e : edges[static_cast<size_t>(d)]) stack.push_back(e);
    }
    return false;
  }

  static bool has_cycle(int d, const std::vector<std::set<int>>& edges,
                        std::vector<int>& color) {
    color[static_cast<size_t>(d)] = 1;
    for (int e : edges[static_cast<size_t>(d)]) {
      if (color[static_cast<size_t>(e)] == 1) return true;
      if (color[static_cast<size_t>(e)] == 0 && has_cycle(e, edges, color)) return true;
    }
    color[static_cast<size_t>(d)] = 2;
    return false;
  }

  Space& space_;
  std::shared_ptr<TypeLoader> loader_;
  std::string name_;
  std::vector<PropertyPrototypePtr> interface_;
  std::vector<std::unique_ptr<ComposingInstance>> composing_;
  std::vector<RouteSym> routes_;
};

}  // namespace compovm
