#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "compovm/native.hpp"
#include "compovm/runtime.hpp"

namespace compovm {

/// Deterministic standard components under the std. namespace. All behavior
/// state lives in property cells, so freezing a live composition captures
/// everything there is to capture.
namespace kit {

inline int32_t wrap_add(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) + static_cast<uint32_t>(b));
}

inline int32_t wrap_mul(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) * static_cast<uint32_t>(b));
}

/// std.Const: a settable source. value [RWB] Int32 = 0.
class Const : public Behavior {
 public:
  void init(BeanContext& ctx) override { ctx.init_property_value("value", Value(int32_t{0})); }
};

/// std.Adder: sum = a + b (two's-complement wraparound).
class Adder : public Behavior {
 public:
  void init(BeanContext& ctx) override {
    ctx.init_property_value("a", Value(int32_t{0}));
    ctx.init_property_value("b", Value(int32_t{0}));
    ctx.init_property_value("sum", Value(wrap_add(ctx.get("a").as_int(), ctx.get("b").as_int())));
  }
  void on_set(BeanContext& ctx, int prop, const Value&, const Value&) override {
    if (prop == 0 || prop == 1)
      ctx.set(2, Value(wrap_add(ctx.get(0).as_int(), ctx.get(1).as_int())));
  }
};

/// std.Mul: prod = a * b (wraparound).
class Mul : public Behavior {
 public:
  void init(BeanContext& ctx) override {
    ctx.init_property_value("a", Value(int32_t{0}));
    ctx.init_property_value("b", Value(int32_t{0}));
    ctx.init_property_value("prod", Value(int32_t{0}));
  }
  void on_set(BeanContext& ctx, int prop, const Value&, const Value&) override {
    if (prop == 0 || prop == 1)
      ctx.set(2, Value(wrap_mul(ctx.get(0).as_int(), ctx.get(1).as_int())));
  }
};

/// std.Gate: out follows in while open; holds its last value while closed.
class Gate : public Behavior {
 public:
  void init(BeanContext& ctx) override {
    ctx.init_property_value("in", Value(int32_t{0}));
    ctx.init_property_value("open", Value(false));
    ctx.init_property_value("out", Value(int32_t{0}));
  }
  void on_set(BeanContext& ctx, int prop, const Value&, const Value&) override {
    if ((prop == 0 || prop == 1) && ctx.get(1).as_bool()) ctx.set(2, ctx.get(0));
  }
};

/// std.Counter: every write to tick increments count, changed or not.
class Counter : public Behavior {
 public:
  void init(BeanContext& ctx) override {
    ctx.init_property_value("tick", Value(int32_t{0}));
    ctx.init_property_value("count", Value(int32_t{0}));
  }
  void on_set(BeanContext& ctx, int prop, const Value&, const Value&) override {
    if (prop == 0) ctx.set(1, Value(wrap_add(ctx.get(1).as_int(), 1)));
  }
};

/// std.Relay: out repeats every write to in.
class Relay : public Behavior {
 public:
  void init(BeanContext& ctx) override {
    ctx.init_property_value("in", Value(int32_t{0}));
    ctx.init_property_value("out", Value(int32_t{0}));
  }
  void on_set(BeanContext& ctx, int prop, const Value&, const Value& v) override {
    if (prop == 0) ctx.set(1, v);
  }
};

/// std.Probe: records every write to in by appending it to trace.
class Probe : public Behavior {
 public:
  void init(BeanContext& ctx) override {
    ctx.init_property_value("in", Value(int32_t{0}));
    ctx.init_property_value("trace", Value(std::vector<Value>{}));
  }
  void on_set(BeanContext& ctx, int prop, const Value&, const Value& v) override {
    if (prop != 0) return;
    std::vector<Value> t = ctx.get(1).elements();
    t.push_back(v);
    ctx.set(1, Value(std::move(t)));
  }
};

}  // namespace kit

inline void register_standard_kit(TypeLoader& loader) {
  type_from_descriptor(loader, NativeDescriptor{
      "std.Const",
      {{"value", "Int32", "RWB"}},
      [] { return std::make_unique<kit::Const>(); },
      nullptr,
      {}});
  type_from_descriptor(loader, NativeDescriptor{
      "std.Adder",
      {{"a", "Int32", "RW"}, {"b", "Int32", "RW"}, {"sum", "Int32", "RB"}},
      [] { return std::make_unique<kit::Adder>(); },
      nullptr,
      {}});
  type_from_descriptor(loader, NativeDescriptor{
      "std.Mul",
      {{"a", "Int32", "RW"}, {"b", "Int32", "RW"}, {"prod", "Int32", "RB"}},
      [] { return std::make_unique<kit::Mul>(); },
      nullptr,
      {}});
  type_from_descriptor(loader, NativeDescriptor{
      "std.Gate",
      {{"in", "Int32", "RW"}, {"open", "Boolean", "RW"}, {"out", "Int32", "RB"}},
      [] { return std::make_unique<kit::Gate>(); },
      nullptr,
      {}});
  type_from_descriptor(loader, NativeDescriptor{
      "std.Counter",
      {{"tick", "Int32", "RW"}, {"count", "Int32", "RB"}},
      [] { return std::make_unique<kit::Counter>(); },
      nullptr,
      {}});
  type_from_descriptor(loader, NativeDescriptor{
      "std.Relay",
      {{"in", "Int32", "RW"}, {"out", "Int32", "RB"}},
      [] { return std::make_unique<kit::Relay>(); },
      nullptr,
      {}});
  type_from_descriptor(loader, NativeDescriptor{
      "std.Probe",
      {{"in", "Any", "RW"}, {"trace", "Any[]", "RB IR"}},
      [] { return std::make_unique<kit::Probe>(); },
      nullptr,
      {}});
}

}  // namespace compovm
