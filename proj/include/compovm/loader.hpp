#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "compovm/errors.hpp"
#include "compovm/type.hpp"

namespace compovm {

inline const char* builtin_name(Builtin b) {
  switch (b) {
    case Builtin::Int32: return "Int32";
    case Builtin::Float64: return "Float64";
    case Builtin::Boolean: return "Boolean";
    case Builtin::String: return "String";
    case Builtin::Any: return "Any";
  }
  return "?";
}

inline bool valid_qname(const std::string& name) {
  if (name.empty()) return false;
  bool segStart = true;
  for (char c : name) {
    if (c == '.') {
      if (segStart) return false;  // empty segment
      segStart = true;
      continue;
    }
    bool alpha = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
    bool digit = c >= '0' && c <= '9';
    if (segStart ? !alpha : !(alpha || digit)) return false;
    segStart = false;
  }
  return !segStart;  // must not end on a dot
}

/// Parent-delegating, caching resolver from dotted names to types. Derived
/// types (T[], var<T>) are synthesized on demand and cached in the loader
/// that defined the element type, so their identity is stable across the
/// whole loader hierarchy.
class TypeLoader : public std::enable_shared_from_this<TypeLoader> {
 public:
  /// A resolution source is consulted when a name is not cached anywhere in
  /// the chain. It may register types as a side effect; whatever it returns
  /// (or registers under the requested name) becomes the cached result.
  using Source = std::function<TypePtr(TypeLoader&, const std::string&)>;

  static std::shared_ptr<TypeLoader> create_root() {
    auto l = std::shared_ptr<TypeLoader>(new TypeLoader());
    for (Builtin b : {Builtin::Int32, Builtin::Float64, Builtin::Boolean, Builtin::String,
                      Builtin::Any}) {
      TypePtr t = Type::make_builtin(b, builtin_name(b));
      t->bind_loader(l);
      std::lock_guard<std::mutex> lock(l->mu_);
      l->cache_.emplace(t->name(), t);
    }
    return l;
  }

  static std::shared_ptr<TypeLoader> create_child(std::shared_ptr<TypeLoader> parent) {
    auto l = std::shared_ptr<TypeLoader>(new TypeLoader());
    l->parent_ = std::move(parent);
    return l;
  }

  const std::shared_ptr<TypeLoader>& parent() const { return parent_; }

  void add_source(Source s) { sources_.push_back(std::move(s)); }

  /// Is the name already materialized in this loader or an ancestor?
  bool bound(const std::string& name) const {
    for (const TypeLoader* l = this; l; l = l->parent_.get())
      if (l->lookup_local(name)) return true;
    return false;
  }

  TypePtr resolve(const std::string& name) {
    if (TypePtr t = try_resolve(name)) return t;
    throw Error(Errc::UnresolvedType, "no type named '" + name + "'");
  }

  TypePtr try_resolve(const std::string& name) {
    if (parent_)
      if (TypePtr t = parent_->try_resolve(name)) return t;
    return try_resolve_local(name);
  }

  /// Register a declared type under its own name. The name must be a valid
  /// dotted identifier and not visible anywhere in the loader chain.
  void register_type(const TypePtr& t) {
    const std::string& name = t->name();
    if (!valid_qname(name))
      throw Error(Errc::UnresolvedType, "malformed type name '" + name + "'");
    std::lock_guard<std::mutex> lock(mu_);
    for (const TypeLoader* l = this; l; l = l->parent_.get())
      if (l->cache_.count(name))
        throw Error(Errc::NameConflict, "type name '" + name + "' is already bound");
    t->bind_loader(shared_from_this());
    cache_.emplace(name, t);
  }

  TypePtr builtin_type(Builtin b) { return resolve(builtin_name(b)); }

  TypePtr synthesize_array(const TypePtr& element) {
    auto owner = element->defining_loader();
    auto self = owner ? owner : shared_from_this();
    std::string name = element->name() + "[]";
    if (TypePtr t = self->lookup_local(name)) return t;
    return self->insert_or_get(name, Type::make_array(element, name));
  }

  TypePtr synthesize_variable(const TypePtr& element) {
    auto owner = element->defining_loader();
    auto self = owner ? owner : shared_from_this();
    std::string name = "var<" + element->name() + ">";
    if (TypePtr t = self->lookup_local(name)) return t;
    unsigned bits = kRead | kWrite | kBound;
    if (element->kind() == TypeKind::Array) bits |= kIndexedRead | kIndexedWrite;
    PropertyType vp = make_property("value", element, AccessSet(bits), zero_value(element));
    return self->insert_or_get(name, Type::make_variable(element, name, std::move(vp)));
  }

  /// Every name cached in this loader and its ancestors, sorted.
  std::vector<std::string> materialized_names() const {
    std::set<std::string> names;
    for (const TypeLoader* l = this; l; l = l->parent_.get()) {
      std::lock_guard<std::mutex> lock(l->mu_);
      for (const auto& [name, t] : l->cache_) names.insert(name);
    }
    return {names.begin(), names.end()};
  }

 private:
  TypeLoader() = default;

  TypePtr lookup_local(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(name);
    return it == cache_.end() ? nullptr : it->second;
  }

  /// Single-winner cache insertion: on a race the first entry stays and is
  /// returned to every caller.
  TypePtr insert_or_get(const std::string& name, TypePtr t) {
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = cache_.emplace(name, std::move(t));
    if (inserted) it->second->bind_loader(shared_from_this());
    return it->second;
  }

  TypePtr try_resolve_local(const std::string& name) {
    if (TypePtr t = lookup_local(name)) return t;
    if (name.size() > 2 && name.compare(name.size() - 2, 2, "[]") == 0) {
      if (TypePtr elem = try_resolve(name.substr(0, name.size() - 2)))
        return synthesize_array(elem);
      return nullptr;
    }
    if (name.size() > 5 && name.compare(0, 4, "var<") == 0 && name.back() == '>') {
      if (TypePtr elem = try_resolve(name.substr(4, name.size() - 5)))
        return synthesize_variable(elem);
      return nullptr;
    }
    if (sources_.empty()) return nullptr;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (inflight_.count(name)) return nullptr;  // recursive self-reference
      inflight_.insert(name);
    }
    TypePtr found;
    try {
      for (auto& src : sources_) {
        TypePtr r = src(*this, name);
        found = lookup_local(name);  // sources usually register what they load
        if (!found && r) found = insert_or_get(name, std::move(r));
        if (found) break;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      inflight_.erase(name);
      throw;
    }
    std::lock_guard<std::mutex> lock(mu_);
    inflight_.erase(name);
    return found;
  }

  std::shared_ptr<TypeLoader> parent_;
  mutable std::mutex mu_;
  std::map<std::string, TypePtr> cache_;
  std::set<std::string> inflight_;
  std::vector<Source> sources_;
};

}  // namespace compovm
