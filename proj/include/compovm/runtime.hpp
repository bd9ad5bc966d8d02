#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "compovm/errors.hpp"
#include "compovm/native.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

class Space;

/// One storage cell. Property sharing (External links, shared property
/// prototypes) is expressed by several (instance, property) bindings
/// pointing at a single cell; events fan out to every bound owner.
struct SharedCell {
  struct Binding {
    Instance* owner;
    int prop;
  };
  Value value;
  std::vector<Binding> bindings;
};

using CellPtr = std::shared_ptr<SharedCell>;

struct Route {
  Instance* src;
  int srcProp;
  Instance* dst;
  int dstProp;
  long id;
};

struct Subscription {
  Instance* instance = nullptr;
  long id = 0;
};

using ChangeListener = std::function<void(const Value& oldValue, const Value& newValue)>;

/// A live object. Storage layout is decided per property: Immutable-category
/// properties read the type's shared default and own no cell; everything
/// else has a cell, possibly shared with other instances. Foreign instances
/// own no cells at all and delegate to their view's hooks.
class Instance {
 public:
  const TypePtr& type() const { return type_; }
  Space* space() const { return space_; }
  int index_of(const std::string& name) const { return type_->property_index(name); }

  /// Effective access for this instance: the declared access, possibly
  /// narrowed by the composition context this instance lives in.
  AccessSet access(int prop) const {
    type_->property(prop);  // range check
    return access_[static_cast<size_t>(prop)];
  }

  /// Composing instances of a composed instance, in definition order.
  const std::vector<std::pair<std::string, InstancePtr>>& inner() const { return inner_; }

  InstancePtr find_inner(const std::string& defName) const {
    for (const auto& [n, i] : inner_)
      if (n == defName) return i;
    return nullptr;
  }

 private:
  friend class Space;

  Instance() = default;

  struct Listener {
    long id;
    int prop;
    ChangeListener fn;
  };

  TypePtr type_;
  Space* space_ = nullptr;
  std::vector<CellPtr> cells_;      // null entry: immutable, read type default
  std::vector<AccessSet> access_;   // effective access per property
  std::unique_ptr<Behavior> behavior_;
  bool foreign_ = false;
  std::vector<Value> foreignSeen_;  // last host values, for watch-driven events
  std::vector<std::pair<std::string, InstancePtr>> inner_;
  std::vector<Listener> listeners_;
};

/// Per-property cell and access plan used when instantiating the inner
/// instances of a composed type: pre-wired shared cells, override cells and
/// narrowed access. Empty vectors mean "all defaults".
struct InstanceSeed {
  std::vector<CellPtr> cells;
  std::vector<AccessSet> access;
};

inline void instantiate_composed_graph(Space& space, const InstancePtr& outer);

/// The single-threaded universe instances live in: owns every instance,
/// the event queue, the route list and the instantiation-context stack.
class Space {
 public:
  Space() = default;
  Space(const Space&) = delete;
  Space& operator=(const Space&) = delete;

  /// Creates an instance of a component type from its defaults alone.
  InstancePtr instantiate(const TypePtr& t) {
    if (!t->is_component())
      throw Error(Errc::NotAComponent, t->name() + " cannot be instantiated from defaults");
    return instantiate_seeded(t, nullptr);
  }

  /// Internal entry for single-property wrapper types (typed variables)
  /// whose initial value is supplied by the caller instead of a default.
  InstancePtr instantiate_with_value(const TypePtr& t, const Value& v) {
    if (t->property_count() != 1)
      throw Error(Errc::NotAComponent, t->name() + " is not a single-property wrapper");
    const PropertyType& pt = t->property(0);
    if (!value_conforms(v, pt.valueType))
      throw Error(Errc::TypeMismatch,
                  "initial value " + to_literal(v) + " does not fit " + pt.valueType->name());
    InstanceSeed seed;
    auto cell = std::make_shared<SharedCell>();
    cell->value = v;
    seed.cells.push_back(std::move(cell));
    return instantiate_seeded(t, &seed);
  }

  /// Like instantiate, but with pre-wired cells and narrowed access. Used by
  /// the composed-type instantiation path; not part of the public surface.
  InstancePtr instantiate_seeded(const TypePtr& t, const InstanceSeed* seed) {
    auto inst = InstancePtr(new Instance());
    inst->type_ = t;
    inst->space_ = this;
    int n = t->property_count();
    inst->cells_.resize(static_cast<size_t>(n));
    inst->access_.resize(static_cast<size_t>(n));
    inst->foreign_ = t->kind() == TypeKind::Foreign;
    for (int i = 0; i < n; ++i) {
      const PropertyType& pt = t->property(i);
      inst->access_[i] =
          (seed && !seed->access.empty()) ? seed->access[static_cast<size_t>(i)] : pt.access;
      if (inst->foreign_) continue;
      CellPtr provided =
          (seed && !seed->cells.empty()) ? seed->cells[static_cast<size_t>(i)] : nullptr;
      if (provided) {
        provided->bindings.push_back({inst.get(), i});
        inst->cells_[i] = std::move(provided);
      } else if (pt.category != PropertyCategory::Immutable) {
        if (!pt.hasDefault)
          throw Error(Errc::NotAComponent,
                      t->name() + "." + pt.name + " has no default to initialize from");
        auto cell = std::make_shared<SharedCell>();
        cell->value = pt.defaultValue;
        cell->bindings.push_back({inst.get(), i});
        inst->cells_[i] = std::move(cell);
      }
    }
    if (inst->foreign_) {
      inst->foreignSeen_.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) inst->foreignSeen_[i] = t->property(i).defaultValue;
      const ForeignObjectView& view = t->foreign_info()->view;
      if (view.watch) {
        for (int i = 0; i < n; ++i) {
          if (!inst->access_[i].bound()) continue;
          Instance* raw = inst.get();
          view.watch(t->property(i).name, [this, raw, i] { foreign_changed(raw, i); });
        }
      }
    }
    if (t->kind() == TypeKind::Native && t->native_info()->behavior)
      inst->behavior_ = t->native_info()->behavior();
    registry_.push_back(inst);
    if (t->kind() == TypeKind::Composed) instantiate_composed_graph(*this, inst);
    return inst;
  }

  Value get(const InstancePtr& i, int prop) { return read(i.get(), prop, true); }
  Value get(const InstancePtr& i, const std::string& prop) {
    return read(i.get(), i->index_of(prop), true);
  }

  /// Diagnostic read that ignores access rights (state fingerprints, traces).
  Value peek(const InstancePtr& i, int prop) { return read(i.get(), prop, false); }
  Value peek(const InstancePtr& i, const std::string& prop) {
    return read(i.get(), i->index_of(prop), false);
  }

  void set(const InstancePtr& i, int prop, const Value& v) {
    write(i.get(), prop, v, WriteKind::External);
  }
  void set(const InstancePtr& i, const std::string& prop, const Value& v) {
    write(i.get(), i->index_of(prop), v, WriteKind::External);
  }

  Value get_indexed(const InstancePtr& i, int prop, int k) {
    const PropertyType& pt = i->type_->property(prop);
    if (!i->access_[static_cast<size_t>(prop)].indexed_readable())
      throw Error(Errc::AccessViolation,
                  i->type_->name() + "." + pt.name + " is not indexed-readable");
    const std::vector<Value>& elems = element_snapshot(i.get(), prop);
    check_index(pt, k, elems.size());
    return elems[static_cast<size_t>(k)];
  }
  Value get_indexed(const InstancePtr& i, const std::string& prop, int k) {
    return get_indexed(i, i->index_of(prop), k);
  }

  void set_indexed(const InstancePtr& i, int prop, int k, const Value& v) {
    const PropertyType& pt = i->type_->property(prop);
    if (!i->access_[static_cast<size_t>(prop)].indexed_writable())
      throw Error(Errc::AccessViolation,
                  i->type_->name() + "." + pt.name + " is not indexed-writable");
    if (!value_conforms(v, pt.valueType->element()))
      throw Error(Errc::TypeMismatch, "element " + to_literal(v) + " does not fit " +
                                          pt.valueType->element()->name());
    std::vector<Value> elems = element_snapshot(i.get(), prop);
    check_index(pt, k, elems.size());
    elems[static_cast<size_t>(k)] = v;
    write(i.get(), prop, Value(std::move(elems)), WriteKind::IndexedCommit);
  }
  void set_indexed(const InstancePtr& i, const std::string& prop, int k, const Value& v) {
    set_indexed(i, i->index_of(prop), k, v);
  }

  Route* add_route(const InstancePtr& src, int srcProp, const InstancePtr& dst, int dstProp) {
    const PropertyType& sp = src->type_->property(srcProp);
    const PropertyType& dp = dst->type_->property(dstProp);
    if (!src->access_[static_cast<size_t>(srcProp)].bound())
      throw Error(Errc::AccessViolation,
                  "route source " + src->type_->name() + "." + sp.name + " is not bound");
    if (!dst->access_[static_cast<size_t>(dstProp)].writable())
      throw Error(Errc::AccessViolation,
                  "route target " + dst->type_->name() + "." + dp.name + " is not writable");
    if (!type_conforms(sp.valueType, dp.valueType))
      throw Error(Errc::TypeMismatch, "cannot route " + sp.valueType->name() + " into " +
                                          dp.valueType->name());
    routes_.push_back(std::unique_ptr<Route>(
        new Route{src.get(), srcProp, dst.get(), dstProp, nextRouteId_++}));
    return routes_.back().get();
  }
  Route* add_route(const InstancePtr& src, const std::string& srcProp, const InstancePtr& dst,
                   const std::string& dstProp) {
    return add_route(src, src->index_of(srcProp), dst, dst->index_of(dstProp));
  }

  Subscription subscribe(const InstancePtr& i, int prop, ChangeListener fn) {
    i->type_->property(prop);
    if (!i->access_[static_cast<size_t>(prop)].bound())
      throw Error(Errc::AccessViolation,
                  i->type_->name() + "." + i->type_->property(prop).name + " is not bound");
    long id = nextListenerId_++;
    i->listeners_.push_back({id, prop, std::move(fn)});
    return Subscription{i.get(), id};
  }
  Subscription subscribe(const InstancePtr& i, const std::string& prop, ChangeListener fn) {
    return subscribe(i, i->index_of(prop), std::move(fn));
  }

  void unsubscribe(const Subscription& s) {
    if (!s.instance) return;
    auto& ls = s.instance->listeners_;
    for (size_t k = 0; k < ls.size(); ++k) {
      if (ls[k].id == s.id) {
        ls.erase(ls.begin() + static_cast<long>(k));
        return;
      }
    }
  }

  /// Drains the event queue FIFO: for each change event, notify listeners in
  /// subscription order, then fire matching routes in creation order, each
  /// at most once per cascade. Returns the number of route deliveries.
  ///
  /// The fired set lives per pump: cascade ids are never reused and the
  /// queue is fully drained here, so no cascade outlives the call that
  /// processes it. Events queued between pumps always carry fresh ids.
  int pump() {
    int delivered = 0;
    std::set<std::pair<const Route*, long>> fired;
    while (!queue_.empty()) {
      QueuedEvent e = queue_.front();
      queue_.pop_front();
      CascadeScope scope(this, e.cascade);
      auto listeners = e.owner->listeners_;  // copy: listeners may (un)subscribe
      for (const auto& l : listeners)
        if (l.prop == e.prop) l.fn(e.oldValue, e.newValue);
      for (const auto& r : routes_) {
        if (r->src != e.owner || r->srcProp != e.prop) continue;
        if (!fired.insert({r.get(), e.cascade}).second) continue;
        if (write(r->dst, r->dstProp, e.newValue, WriteKind::Delivery)) ++delivered;
      }
    }
    return delivered;
  }

  bool pending_events() const { return !queue_.empty(); }
  int instance_count() const { return static_cast<int>(registry_.size()); }
  int route_count() const { return static_cast<int>(routes_.size()); }

  // Instantiation-context stack: the composed instance whose implementation
  // graph is currently being instantiated.
  void push_context(Instance* outer) { contextStack_.push_back(outer); }
  void pop_context() { contextStack_.pop_back(); }
  Instance* current_context() const {
    return contextStack_.empty() ? nullptr : contextStack_.back();
  }
  int context_depth() const { return static_cast<int>(contextStack_.size()); }

  /// Materializes a cell for a property that would normally read the type
  /// default, so an inner instance can share it. Used during composed
  /// instantiation.
  CellPtr ensure_cell(const InstancePtr& i, int prop) {
    CellPtr& cell = i->cells_[static_cast<size_t>(prop)];
    if (!cell) {
      cell = std::make_shared<SharedCell>();
      cell->value = i->type_->property(prop).defaultValue;
      cell->bindings.push_back({i.get(), prop});
    }
    return cell;
  }

  void record_inner(const InstancePtr& outer, std::string defName, InstancePtr child) {
    outer->inner_.emplace_back(std::move(defName), std::move(child));
  }

  // Composition plumbing, used by the prototype and composer modules.

  CellPtr cell_of(const InstancePtr& i, int prop) {
    i->type_->property(prop);
    return i->cells_[static_cast<size_t>(prop)];
  }

  /// Points a property at another cell (property-prototype sharing). The
  /// rebinding itself is silent; only subsequent writes notify.
  void rebind_cell(const InstancePtr& i, int prop, const CellPtr& target) {
    CellPtr& cur = i->cells_[static_cast<size_t>(prop)];
    if (cur == target) return;
    if (cur) {
      auto& bs = cur->bindings;
      for (size_t k = 0; k < bs.size(); ++k) {
        if (bs[k].owner == i.get() && bs[k].prop == prop) {
          bs.erase(bs.begin() + static_cast<long>(k));
          break;
        }
      }
    }
    target->bindings.push_back({i.get(), prop});
    cur = target;
  }

  void set_instance_access(const InstancePtr& i, int prop, AccessSet effective) {
    i->type_->property(prop);
    i->access_[static_cast<size_t>(prop)] = effective;
  }

  /// Composition-time write: ignores access rights (wiring a value into a
  /// slot is not a client write) but still checks conformance and notifies.
  void compose_write(const InstancePtr& i, int prop, const Value& v) {
    write(i.get(), prop, v, WriteKind::Wiring);
  }

 private:
  friend class BeanContext;
  friend void instantiate_composed_graph(Space& space, const InstancePtr& outer);

  enum class WriteKind { External, Internal, Delivery, IndexedCommit, Wiring };

  struct QueuedEvent {
    Instance* owner;
    int prop;
    Value oldValue;
    Value newValue;
    long cascade;
  };

  struct CascadeScope {
    Space* s;
    long saved;
    CascadeScope(Space* s, long c) : s(s), saved(s->currentCascade_) { s->currentCascade_ = c; }
    ~CascadeScope() { s->currentCascade_ = saved; }
  };

  static void check_index(const PropertyType& pt, int k, size_t size) {
    if (k < 0 || static_cast<size_t>(k) >= size)
      throw Error(Errc::IndexOutOfBounds, pt.name + "[" + std::to_string(k) + "] out of range (length " +
                                              std::to_string(size) + ")");
  }

  const std::vector<Value>& element_snapshot(Instance* i, int prop) {
    // Returns elements of the current array value through internal read.
    snapshot_ = read(i, prop, /*checkAccess=*/false);
    return snapshot_.elements();
  }

  Value read(Instance* i, int prop, bool checkAccess) {
    const PropertyType& pt = i->type_->property(prop);
    if (checkAccess && !i->access_[static_cast<size_t>(prop)].readable())
      throw Error(Errc::AccessViolation, i->type_->name() + "." + pt.name + " is not readable");
    if (i->foreign_) {
      Value v = i->type_->foreign_info()->view.get(pt.name);
      i->foreignSeen_[static_cast<size_t>(prop)] = v;
      return v;
    }
    const CellPtr& cell = i->cells_[static_cast<size_t>(prop)];
    return cell ? cell->value : pt.defaultValue;
  }

  /// Returns false when a Delivery is dropped instead of committed.
  bool write(Instance* i, int prop, const Value& v, WriteKind kind) {
    const PropertyType& pt = i->type_->property(prop);
    AccessSet eff = i->access_[static_cast<size_t>(prop)];
    switch (kind) {
      case WriteKind::External:
        if (!eff.writable())
          throw Error(Errc::AccessViolation,
                      i->type_->name() + "." + pt.name + " is not writable");
        break;
      case WriteKind::Internal:
        // Behavior writes follow the type's declared rights, not the
        // composition context: narrowing restricts clients, not the
        // component's own implementation.
        if (!pt.access.writable() && !pt.access.bound())
          throw Error(Errc::AccessViolation,
                      i->type_->name() + "." + pt.name + " is immutable");
        break;
      case WriteKind::Delivery:
        // Wiring was validated when the route was made; a right revoked
        // since then drops the delivery rather than failing the pump.
        if (!eff.writable()) return false;
        break;
      case WriteKind::IndexedCommit:
        break;  // caller checked IW
      case WriteKind::Wiring:
        break;  // composition wiring is not a client write
    }
    if (kind != WriteKind::IndexedCommit && !value_conforms(v, pt.valueType))
      throw Error(Errc::TypeMismatch,
                  to_literal(v) + " does not fit " + pt.valueType->name() + " (" +
                      i->type_->name() + "." + pt.name + ")");
    if (i->foreign_) {
      foreign_write(i, prop, v);
      return true;
    }
    const CellPtr& cell = i->cells_[static_cast<size_t>(prop)];
    if (!cell)
      throw Error(Errc::AccessViolation,
                  i->type_->name() + "." + pt.name + " is immutable");
    // A shared cell is read through every binding's declared type, so the
    // value must fit all of them, not just the one written through.
    for (const auto& b : cell->bindings) {
      if (b.owner == i && b.prop == prop) continue;
      const PropertyType& bpt = b.owner->type_->property(b.prop);
      if (value_conforms(v, bpt.valueType)) continue;
      if (kind == WriteKind::Delivery) return false;  // dropped, like a revoked right
      throw Error(Errc::TypeMismatch,
                  to_literal(v) + " does not fit " + bpt.valueType->name() + " (" +
                      b.owner->type_->name() + "." + bpt.name + " shares this cell)");
    }
    commit(cell, v);
    return true;
  }

  /// The one place state changes: writes the cell, enqueues change events
  /// for every bound binding, then runs the bound owners' behavior hooks.
  /// Everything the hooks cause joins the same cascade.
  void commit(const CellPtr& cell, const Value& v) {
    Value old = cell->value;
    bool changed = !(old == v);
    cell->value = v;
    long cascade = currentCascade_ >= 0 ? currentCascade_ : cascadeCounter_++;
    if (changed) {
      for (const auto& b : cell->bindings)
        if (b.owner->access_[static_cast<size_t>(b.prop)].bound())
          queue_.push_back({b.owner, b.prop, old, v, cascade});
    }
    CascadeScope scope(this, cascade);
    auto bindings = cell->bindings;  // copy: hooks may rewire
    for (const auto& b : bindings) {
      if (!b.owner->behavior_) continue;
      BeanContext ctx;
      ctx.space_ = this;
      ctx.self_ = b.owner;
      b.owner->behavior_->on_set(ctx, b.prop, old, v);
    }
  }

  void foreign_write(Instance* i, int prop, const Value& v) {
    const PropertyType& pt = i->type_->property(prop);
    const ForeignObjectView& view = i->type_->foreign_info()->view;
    Value old = view.get(pt.name);
    view.set(pt.name, v);
    Value now = view.get(pt.name);
    i->foreignSeen_[static_cast<size_t>(prop)] = now;
    if (!(old == now) && i->access_[static_cast<size_t>(prop)].bound()) {
      long cascade = currentCascade_ >= 0 ? currentCascade_ : cascadeCounter_++;
      queue_.push_back({i, prop, std::move(old), now, cascade});
    }
  }

  void foreign_changed(Instance* i, int prop) {
    const PropertyType& pt = i->type_->property(prop);
    Value now = i->type_->foreign_info()->view.get(pt.name);
    Value& seen = i->foreignSeen_[static_cast<size_t>(prop)];
    if (seen == now) return;
    Value old = seen;
    seen = now;
    if (i->access_[static_cast<size_t>(prop)].bound()) {
      long cascade = currentCascade_ >= 0 ? currentCascade_ : cascadeCounter_++;
      queue_.push_back({i, prop, std::move(old), std::move(now), cascade});
    }
  }

  std::vector<InstancePtr> registry_;
  std::deque<QueuedEvent> queue_;
  std::vector<std::unique_ptr<Route>> routes_;
  std::vector<Instance*> contextStack_;
  long cascadeCounter_ = 0;
  long currentCascade_ = -1;
  long nextListenerId_ = 1;
  long nextRouteId_ = 1;
  Value snapshot_;  // scratch for element_snapshot
};

inline TypePtr instance_type(const InstancePtr& p) { return p ? p->type() : nullptr; }

inline void BeanContext::init_property_value(const std::string& name, const Value& v) {
  if (!captureOut_) return;  // live instance: already initialized with defaults
  int idx = -1;
  for (size_t i = 0; i < captureProps_->size(); ++i)
    if ((*captureProps_)[i].name == name) {
      idx = static_cast<int>(i);
      break;
    }
  if (idx < 0) throw Error(Errc::UnknownProperty, "no property '" + name + "'");
  const PropertyType& pt = (*captureProps_)[static_cast<size_t>(idx)];
  if (!value_conforms(v, pt.valueType))
    throw Error(Errc::TypeMismatch,
                to_literal(v) + " does not fit " + pt.valueType->name() + " (" + name + ")");
  auto& slot = (*captureOut_)[static_cast<size_t>(idx)];
  if (slot)
    throw Error(Errc::DuplicateInit, "default for '" + name + "' was already initialized");
  slot = v;
}

inline int BeanContext::index_of(const std::string& name) const {
  if (captureProps_) {
    for (size_t i = 0; i < captureProps_->size(); ++i)
      if ((*captureProps_)[i].name == name) return static_cast<int>(i);
    throw Error(Errc::UnknownProperty, "no property '" + name + "'");
  }
  return self_->type()->property_index(name);
}

inline int BeanContext::property_count() const {
  return captureProps_ ? static_cast<int>(captureProps_->size())
                       : self_->type()->property_count();
}

inline Value BeanContext::get(int prop) const {
  if (captureOut_) {
    if (prop < 0 || static_cast<size_t>(prop) >= captureOut_->size())
      throw Error(Errc::IndexOutOfBounds, "no property #" + std::to_string(prop));
    const auto& slot = (*captureOut_)[static_cast<size_t>(prop)];
    if (!slot)
      throw Error(Errc::MissingDefault,
                  "'" + (*captureProps_)[static_cast<size_t>(prop)].name +
                      "' read before its default was initialized");
    return *slot;
  }
  return space_->read(self_, prop, false);
}

inline Value BeanContext::get(const std::string& name) const { return get(index_of(name)); }

inline void BeanContext::set(int prop, const Value& v) {
  if (captureOut_)
    throw Error(Errc::AccessViolation,
                "setPropertyValue is unavailable during type creation; use init_property_value");
  space_->write(self_, prop, v, Space::WriteKind::Internal);
}

inline void BeanContext::set(const std::string& name, const Value& v) { set(index_of(name), v); }

}  // namespace compovm
