#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "compovm/composed.hpp"
#include "compovm/errors.hpp"
#include "compovm/loader.hpp"
#include "compovm/prototype.hpp"
#include "compovm/runtime.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

namespace detail {

inline FrozenValue freeze_value(const Prototype& p, const Value& v) {
  if (v.is_instance()) {
    int d = p.def_index_of(v.as_instance());
    if (d >= 0) return FrozenValue::def_ref(d);
    return FrozenValue::plain(v);  // a shared reference from outside the prototype
  }
  if (v.is_array()) {
    std::vector<FrozenValue> xs;
    bool anyRef = false;
    for (const Value& e : v.elements()) {
      xs.push_back(freeze_value(p, e));
      if (!xs.back().is_plain()) anyRef = true;
    }
    if (!anyRef) return FrozenValue::plain(v);
    return FrozenValue::array(std::move(xs));
  }
  return FrozenValue::plain(v);
}

inline void frozen_refs(const FrozenValue& fv, std::set<int>& out) {
  if (std::holds_alternative<int>(fv.v)) {
    out.insert(std::get<int>(fv.v));
  } else if (std::holds_alternative<std::vector<FrozenValue>>(fv.v)) {
    for (const auto& e : std::get<std::vector<FrozenValue>>(fv.v)) frozen_refs(e, out);
  }
}

inline void remap_refs(FrozenValue& fv, const std::vector<int>& newIdx) {
  if (std::holds_alternative<int>(fv.v)) {
    fv.v = newIdx[static_cast<size_t>(std::get<int>(fv.v))];
  } else if (std::holds_alternative<std::vector<FrozenValue>>(fv.v)) {
    for (auto& e : std::get<std::vector<FrozenValue>>(fv.v)) remap_refs(e, newIdx);
  }
}

inline bool value_has_def(const Prototype& p, const Value& v) {
  if (v.is_instance()) return p.def_index_of(v.as_instance()) >= 0;
  if (v.is_array()) {
    for (const Value& e : v.elements())
      if (value_has_def(p, e)) return true;
  }
  return false;
}

}  // namespace detail

/// Freezes a prototype into an immutable composed type and registers it with
/// the prototype's loader. The live state is snapshotted: interface values
/// become defaults, shared cells become links or share groups, and any inner
/// value that differs from its type default becomes an override. Validation
/// faults abort the freeze.
inline TypePtr create_from_prototype(Prototype& p) {
  std::vector<Fault> faults = p.validate();
  if (!faults.empty()) throw ValidationError(std::move(faults));
  Space& sp = p.space();

  std::vector<PropertyType> props;
  std::map<const SharedCell*, int> ifaceCell;
  for (const auto& ip : p.interface_props()) {
    Value live = sp.peek(ip->variable, 0);
    props.push_back(make_property(ip->name, ip->valueType, ip->access, live));
    ifaceCell[sp.cell_of(ip->variable, 0).get()] = ip->interfaceIndex;
  }

  std::map<const SharedCell*, int> users;
  for (const auto& c : p.composing())
    for (int i = 0; i < c->type->property_count(); ++i)
      users[sp.cell_of(c->live, i).get()] += 1;

  auto impl = std::make_shared<ComposedImplementation>();
  std::map<const SharedCell*, int> groupOf;
  std::vector<ComposingTypeSpec> specs;
  for (const auto& c : p.composing()) {
    ComposingTypeSpec s;
    s.defName = c->defName;
    s.type = c->type;
    for (int i = 0; i < c->type->property_count(); ++i) {
      PropertyRefinement r;
      r.access = c->live->access(i);
      CellPtr cell = sp.cell_of(c->live, i);
      auto linked = ifaceCell.find(cell.get());
      if (linked != ifaceCell.end()) {
        r.externalLink = linked->second;
      } else if (users[cell.get()] > 1) {
        auto git = groupOf.find(cell.get());
        if (git == groupOf.end()) {
          if (detail::value_has_def(p, cell->value))
            throw Error(Errc::ValidationFailed,
                        "shared slot " + c->defName + "." + c->type->property(i).name +
                            " holds a composing instance; that cannot freeze");
          git = groupOf.emplace(cell.get(), static_cast<int>(impl->groups.size())).first;
          impl->groups.push_back(
              {c->slots[static_cast<size_t>(i)]->valueType, cell->value});
        }
        r.shareGroup = git->second;
      } else {
        FrozenValue fv = detail::freeze_value(p, cell->value);
        const PropertyType& pt = c->type->property(i);
        if (!(fv.is_plain() && fv.as_plain() == pt.defaultValue)) r.override = std::move(fv);
      }
      s.refined.push_back(std::move(r));
    }
    specs.push_back(std::move(s));
  }

  for (const auto& r : p.routes()) {
    RouteSpec rs;
    auto place = [&](const std::string& name, const std::string& prop, int& def, int& idx) {
      if (PropertyPrototypePtr ip = p.find_interface(name)) {
        def = -1;
        idx = ip->interfaceIndex;
      } else {
        ComposingInstance* c = p.find_composing(name);
        def = c->defIndex;
        idx = c->type->property_index(prop);
      }
    };
    place(r.srcName, r.srcProp, rs.srcDef, rs.srcProp);
    place(r.dstName, r.dstProp, rs.dstDef, rs.dstProp);
    impl->routes.push_back(rs);
  }

  // Order the composing list children-first so instantiation resolves def
  // refs in one pass. The scan prefers low original indices, so an already
  // children-first prototype (any parsed file) keeps its order.
  size_t n = specs.size();
  std::vector<std::set<int>> children(n);
  for (size_t d = 0; d < n; ++d)
    for (const auto& r : specs[d].refined)
      if (r.override) detail::frozen_refs(*r.override, children[d]);
  std::vector<int> order;
  std::vector<char> placed(n, 0);
  while (order.size() < n) {
    bool progressed = false;
    for (size_t d = 0; d < n && !progressed; ++d) {
      if (placed[d]) continue;
      bool ready = true;
      for (int ch : children[d])
        if (!placed[static_cast<size_t>(ch)]) ready = false;
      if (ready) {
        order.push_back(static_cast<int>(d));
        placed[d] = 1;
        progressed = true;
      }
    }
    if (!progressed)
      throw Error(Errc::CycleDetected, "containment graph has a cycle");
  }
  std::vector<int> newIdx(n);
  for (size_t k = 0; k < n; ++k) newIdx[static_cast<size_t>(order[k])] = static_cast<int>(k);
  for (int old : order) {
    impl->composing.push_back(std::move(specs[static_cast<size_t>(old)]));
    for (auto& r : impl->composing.back().refined)
      if (r.override) detail::remap_refs(*r.override, newIdx);
  }
  for (auto& r : impl->routes) {
    if (r.srcDef >= 0) r.srcDef = newIdx[static_cast<size_t>(r.srcDef)];
    if (r.dstDef >= 0) r.dstDef = newIdx[static_cast<size_t>(r.dstDef)];
  }

  TypePtr t = Type::make_composed(p.name(), std::move(props), std::move(impl));
  p.loader()->register_type(t);
  return t;
}

inline Value thaw(const FrozenValue& fv, const std::vector<InstancePtr>& made) {
  if (std::holds_alternative<Value>(fv.v)) return std::get<Value>(fv.v);
  if (std::holds_alternative<int>(fv.v))
    return Value(made[static_cast<size_t>(std::get<int>(fv.v))]);
  std::vector<Value> xs;
  for (const auto& e : std::get<std::vector<FrozenValue>>(fv.v)) xs.push_back(thaw(e, made));
  return Value(std::move(xs));
}

/// Builds the inner instance graph of a freshly created composed instance:
/// share-group cells, external links into the outer instance's own cells,
/// override cells, then the inner instances (children first) and routes.
/// Override cells are seeded directly; no change notifications fire.
inline void instantiate_composed_graph(Space& space, const InstancePtr& outer) {
  const ComposedImplementation& impl = *outer->type()->composed_impl();
  space.push_context(outer.get());
  struct Pop {
    Space& s;
    ~Pop() { s.pop_context(); }
  } pop{space};

  std::vector<CellPtr> groupCells;
  groupCells.reserve(impl.groups.size());
  for (const auto& g : impl.groups) {
    auto cell = std::make_shared<SharedCell>();
    cell->value = g.initial;
    groupCells.push_back(std::move(cell));
  }

  std::vector<InstancePtr> made(impl.composing.size());
  for (size_t d = 0; d < impl.composing.size(); ++d) {
    const ComposingTypeSpec& cs = impl.composing[d];
    int n = cs.type->property_count();
    InstanceSeed seed;
    seed.cells.resize(static_cast<size_t>(n));
    seed.access.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const PropertyRefinement& r = cs.refined[static_cast<size_t>(i)];
      seed.access[static_cast<size_t>(i)] = r.access;
      if (r.externalLink >= 0) {
        seed.cells[static_cast<size_t>(i)] = space.ensure_cell(outer, r.externalLink);
      } else if (r.shareGroup >= 0) {
        seed.cells[static_cast<size_t>(i)] = groupCells[static_cast<size_t>(r.shareGroup)];
      } else if (r.override) {
        auto cell = std::make_shared<SharedCell>();
        cell->value = thaw(*r.override, made);
        seed.cells[static_cast<size_t>(i)] = std::move(cell);
      }
    }
    made[d] = space.instantiate_seeded(cs.type, &seed);
    space.record_inner(outer, cs.defName, made[d]);
  }

  for (const RouteSpec& r : impl.routes) {
    const InstancePtr& src = r.srcDef < 0 ? outer : made[static_cast<size_t>(r.srcDef)];
    const InstancePtr& dst = r.dstDef < 0 ? outer : made[static_cast<size_t>(r.dstDef)];
    space.add_route(src, r.srcProp, dst, r.dstProp);
  }
}

}  // namespace compovm
