#include <gtest/gtest.h>

#include <memory>

#include "compovm/compovm.hpp"

namespace compovm {
namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::SyntaxError;
}

bool has_fault(const std::vector<Fault>& fs, Errc c) {
  for (const auto& f : fs)
    if (f.code == c) return true;
  return false;
}

class PrototypeTest : public ::testing::Test {
 protected:
  PrototypeTest() { register_standard_kit(*loader); }

  std::shared_ptr<TypeLoader> loader = TypeLoader::create_root();
  Space space;
  Prototype proto{space, loader, "test.T"};
};

// --- interface properties ---

TEST_F(PrototypeTest, InterfacePropertySynthesizesDefault) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  ASSERT_TRUE(x->variable);
  EXPECT_EQ(proto.get("x", ""), Value(0));
  EXPECT_EQ(proto.get("x", "value"), Value(0));
  EXPECT_FALSE(x->declaredDefault.has_value());
  EXPECT_TRUE(x->isInterface);
  EXPECT_EQ(x->interfaceIndex, 0);
}

TEST_F(PrototypeTest, InterfacePropertyTakesExplicitDefault) {
  proto.add_interface_property("s", "String", parse_access("RW"), Value("hello"));
  EXPECT_EQ(proto.get("s", ""), Value("hello"));
}

TEST_F(PrototypeTest, InterfacePropertyIsLiveImmediately) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  proto.set_field(x, Value(33));
  EXPECT_EQ(proto.get("x", ""), Value(33));
}

TEST_F(PrototypeTest, DeclaredAccessIsEnforcedFromTheStart) {
  auto r = proto.add_interface_property("r", "Int32", parse_access("R"));
  EXPECT_EQ(code_of([&] { proto.set_field(r, Value(1)); }), Errc::AccessViolation);
}

TEST_F(PrototypeTest, InterfaceNamesMustBeFresh) {
  proto.add_interface_property("x", "Int32", parse_access("RW"));
  EXPECT_EQ(code_of([&] { proto.add_interface_property("x", "Int32", parse_access("RW")); }),
            Errc::NameConflict);
  proto.add_component("c", "std.Adder");
  EXPECT_EQ(code_of([&] { proto.add_interface_property("c", "Int32", parse_access("RW")); }),
            Errc::NameConflict);
  EXPECT_EQ(code_of([&] { proto.add_component("x", "std.Adder"); }), Errc::NameConflict);
  EXPECT_EQ(code_of([&] { proto.add_component("", "std.Adder"); }), Errc::NameConflict);
}

TEST_F(PrototypeTest, InterfacePropertyValidatesFlagsAndDefault) {
  EXPECT_EQ(code_of([&] { proto.add_interface_property("b", "Int32", AccessSet(kBound)); }),
            Errc::InvalidAccess);
  EXPECT_EQ(code_of([&] {
              proto.add_interface_property("f", "Float64", parse_access("RW"), Value(1));
            }),
            Errc::TypeMismatch);
  EXPECT_EQ(code_of([&] { proto.add_interface_property("u", "no.T", parse_access("RW")); }),
            Errc::UnresolvedType);
}

TEST_F(PrototypeTest, InstanceTypedPropertyWithoutDefaultHasNoVariable) {
  auto p = proto.add_interface_property("inner", "std.Adder", parse_access("R"));
  EXPECT_FALSE(p->variable);
  EXPECT_EQ(code_of([&] { proto.get("inner", ""); }), Errc::MissingDefault);
  auto faults = proto.validate();
  EXPECT_TRUE(has_fault(faults, Errc::NotAComponent));
}

TEST_F(PrototypeTest, InstanceTypedPropertyWithDefaultWorks) {
  InstancePtr adder = space.instantiate(loader->resolve("std.Adder"));
  auto p = proto.add_interface_property("inner", "std.Adder", parse_access("R"), Value(adder));
  ASSERT_TRUE(p->variable);
  EXPECT_EQ(proto.get("inner", "").as_instance(), adder);
  EXPECT_TRUE(proto.validate().empty());
}

TEST_F(PrototypeTest, ArrayTypedInterfaceProperty) {
  proto.add_interface_property("xs", "Int32[]", parse_access("RWB IR IW"),
                               Value(std::vector<Value>{Value(1), Value(2)}));
  EXPECT_EQ(proto.get("xs", "").elements().size(), 2u);
}

// --- composing instances ---

TEST_F(PrototypeTest, AddComponentSeedsSlotsFromDefaults) {
  ComposingInstance& c = proto.add_component("add", "std.Adder");
  EXPECT_EQ(c.defName, "add");
  EXPECT_EQ(c.defIndex, 0);
  EXPECT_EQ(proto.get("add", "sum"), Value(0));
  ASSERT_EQ(c.own.size(), 3u);
  EXPECT_EQ(c.slots, c.own);
  EXPECT_EQ(c.slot("a"), c.own[0]);
  EXPECT_EQ(proto.find_composing("add"), &c);
  EXPECT_EQ(proto.find_composing("gone"), nullptr);
}

TEST_F(PrototypeTest, AddComponentRejectsNonComponents) {
  EXPECT_EQ(code_of([&] { proto.add_component("i", "Int32"); }), Errc::NotAComponent);
  EXPECT_EQ(code_of([&] { proto.add_component("u", "no.T"); }), Errc::UnresolvedType);
}

TEST_F(PrototypeTest, ComposingInstanceIsLive) {
  ComposingInstance& c = proto.add_component("add", "std.Adder");
  proto.set_field(c, "a", Value(2));
  proto.set_field(c, "b", Value(3));
  EXPECT_EQ(proto.get("add", "sum"), Value(5));  // behavior ran synchronously
}

// --- sharing ---

TEST_F(PrototypeTest, SharedInterfacePropertyIsOneCell) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  ComposingInstance& c = proto.add_component("add", "std.Adder");
  proto.share_property(c, "a", x);
  proto.share_property(c, "b", x);
  EXPECT_EQ(c.slots[0], x);
  proto.set_field(x, Value(6));
  EXPECT_EQ(proto.get("add", "a"), Value(6));
  EXPECT_EQ(proto.get("add", "sum"), Value(12));  // a and b moved together
  // Writing through the slot reaches the same storage.
  proto.set_field(c, "a", Value(10));
  EXPECT_EQ(proto.get("x", ""), Value(10));
}

TEST_F(PrototypeTest, ShareBetweenComposingSlots) {
  ComposingInstance& c1 = proto.add_component("c1", "std.Const");
  ComposingInstance& c2 = proto.add_component("add", "std.Adder");
  proto.share_property(c2, "a", c1.slot("value"));
  proto.set_field(c1, "value", Value(8));
  EXPECT_EQ(proto.get("add", "a"), Value(8));
  EXPECT_EQ(proto.get("add", "sum"), Value(8));
}

TEST_F(PrototypeTest, ShareChecksConformance) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RW"));
  ComposingInstance& g = proto.add_component("g", "std.Gate");
  EXPECT_EQ(code_of([&] { proto.share_property(g, "open", x); }), Errc::TypeMismatch);
  // Int32 flows into an Any slot fine.
  ComposingInstance& p = proto.add_component("p", "std.Probe");
  EXPECT_NO_THROW(proto.share_property(p, "in", x));
}

TEST_F(PrototypeTest, ShareNeedsALiveSource) {
  ComposingInstance& c = proto.add_component("add", "std.Adder");
  auto hollow = proto.add_interface_property("inner", "std.Probe", parse_access("R"));
  EXPECT_EQ(code_of([&] { proto.share_property(c, "a", hollow); }), Errc::MissingDefault);
  EXPECT_EQ(code_of([&] { proto.share_property(c, "a", nullptr); }), Errc::MissingDefault);
}

// --- writes ---

TEST_F(PrototypeTest, SetFieldHonorsAccessComposeFieldBypassesIt) {
  ComposingInstance& c = proto.add_component("add", "std.Adder");
  EXPECT_EQ(code_of([&] { proto.set_field(c, "sum", Value(9)); }), Errc::AccessViolation);
  proto.compose_field(c, "sum", Value(9));
  EXPECT_EQ(proto.get("add", "sum"), Value(9));
  EXPECT_EQ(code_of([&] { proto.compose_field(c, "sum", Value("x")); }), Errc::TypeMismatch);
}

// --- containment ---

TEST_F(PrototypeTest, LinkChildStoresInstance) {
  ComposingInstance& parent = proto.add_component("parent", "std.Probe");
  ComposingInstance& child = proto.add_component("child", "std.Adder");
  proto.link_child(parent, "in", "child");
  EXPECT_EQ(proto.get("parent", "in").as_instance(), child.live);
  auto edges = proto.containment_edges();
  EXPECT_TRUE(edges[0].count(1));
  EXPECT_EQ(proto.def_index_of(child.live), 1);
  EXPECT_EQ(proto.def_index_of(nullptr), -1);
}

TEST_F(PrototypeTest, LinkChildChecksNameAndType) {
  ComposingInstance& parent = proto.add_component("parent", "std.Probe");
  EXPECT_EQ(code_of([&] { proto.link_child(parent, "in", "ghost"); }), Errc::UnknownName);
  ComposingInstance& counter = proto.add_component("counter", "std.Counter");
  // tick is Int32-typed: an instance cannot go there.
  EXPECT_EQ(code_of([&] { proto.link_child(counter, "tick", "parent"); }), Errc::TypeMismatch);
}

TEST_F(PrototypeTest, LinkChildRefusesSelfAndTwoStepCycles) {
  ComposingInstance& a = proto.add_component("a", "std.Probe");
  ComposingInstance& b = proto.add_component("b", "std.Probe");
  EXPECT_EQ(code_of([&] { proto.link_child(a, "in", "a"); }), Errc::CycleDetected);
  proto.link_child(a, "in", "b");
  EXPECT_EQ(code_of([&] { proto.link_child(b, "in", "a"); }), Errc::CycleDetected);
}

TEST_F(PrototypeTest, LinkChildRefusesLongerCycles) {
  ComposingInstance& a = proto.add_component("a", "std.Probe");
  ComposingInstance& b = proto.add_component("b", "std.Probe");
  ComposingInstance& c = proto.add_component("c", "std.Probe");
  proto.link_child(a, "in", "b");
  proto.link_child(b, "in", "c");
  EXPECT_EQ(code_of([&] { proto.link_child(c, "in", "a"); }), Errc::CycleDetected);
  // A diamond is fine: sharing a child is not a cycle.
  proto.add_component("d", "std.Probe");
  proto.link_child(c, "in", "d");
  EXPECT_NO_THROW(proto.link_child(b, "in", "d"));
}

TEST_F(PrototypeTest, ContainmentSeesThroughArrays) {
  // Probe.trace accumulates everything written to in, so writing an
  // instance leaves it inside an array-valued property.
  ComposingInstance& a = proto.add_component("a", "std.Probe");
  ComposingInstance& b = proto.add_component("b", "std.Probe");
  proto.compose_field(a, "in", Value(b.live));
  auto edges = proto.containment_edges();
  EXPECT_TRUE(edges[0].count(1));
  EXPECT_EQ(code_of([&] { proto.link_child(b, "in", "a"); }), Errc::CycleDetected);
}

// --- access narrowing ---

TEST_F(PrototypeTest, RestrictInterfaceAccess) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  proto.set_field(x, Value(1));
  proto.restrict_access(x, AccessSet(kWrite));
  EXPECT_EQ(x->access, parse_access("RB"));
  EXPECT_EQ(code_of([&] { proto.set_field(x, Value(2)); }), Errc::AccessViolation);
  EXPECT_EQ(proto.get("x", ""), Value(1));
  // Narrowing away R while B remains is incoherent and refused.
  EXPECT_EQ(code_of([&] { proto.restrict_access(x, AccessSet(kRead)); }), Errc::InvalidAccess);
}

TEST_F(PrototypeTest, RestrictSlotAccess) {
  ComposingInstance& c = proto.add_component("add", "std.Adder");
  proto.restrict_access(c, "a", AccessSet(kWrite));
  EXPECT_EQ(code_of([&] { proto.set_field(c, "a", Value(1)); }), Errc::AccessViolation);
  EXPECT_EQ(c.own[0]->access, AccessSet(kRead));
  // The component's own behavior is not the client: b still drives sum.
  proto.set_field(c, "b", Value(4));
  EXPECT_EQ(proto.get("add", "sum"), Value(4));
}

// --- routes ---

TEST_F(PrototypeTest, RouteBetweenComposingSlots) {
  ComposingInstance& c = proto.add_component("c", "std.Const");
  proto.add_component("add", "std.Adder");
  proto.add_route("c", "value", "add", "a");
  ASSERT_EQ(proto.routes().size(), 1u);
  EXPECT_EQ(proto.routes()[0].srcName, "c");
  proto.set_field(c, "value", Value(5));
  space.pump();
  EXPECT_EQ(proto.get("add", "sum"), Value(5));
}

TEST_F(PrototypeTest, RouteWithInterfaceEndpoints) {
  auto out = proto.add_interface_property("out", "Int32", parse_access("RWB"));
  proto.add_component("cnt", "std.Counter");
  proto.add_route("cnt", "count", "out", "value");
  ComposingInstance& cnt = *proto.find_composing("cnt");
  proto.set_field(cnt, "tick", Value(1));
  space.pump();
  EXPECT_EQ(proto.get("out", ""), Value(1));
  (void)out;
}

TEST_F(PrototypeTest, RouteEndpointRules) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  auto quiet = proto.add_interface_property("quiet", "Int32", parse_access("RW"));
  proto.add_component("add", "std.Adder");
  // Interface endpoints address the single value only.
  EXPECT_EQ(code_of([&] { proto.add_route("x", "other", "add", "a"); }), Errc::UnknownProperty);
  EXPECT_EQ(code_of([&] { proto.add_route("ghost", "value", "add", "a"); }), Errc::UnknownName);
  // Source must be bound: quiet is RW only.
  EXPECT_EQ(code_of([&] { proto.add_route("quiet", "value", "add", "a"); }),
            Errc::AccessViolation);
  // Target must be writable.
  EXPECT_EQ(code_of([&] { proto.add_route("x", "value", "add", "sum"); }), Errc::AccessViolation);
  (void)x;
}

// --- validation ---

TEST_F(PrototypeTest, CleanPrototypeValidates) {
  proto.add_interface_property("x", "Int32", parse_access("RWB"));
  proto.add_component("add", "std.Adder");
  EXPECT_TRUE(proto.validate().empty());
}

TEST_F(PrototypeTest, BadTypeNameIsAFault) {
  Prototype bad(space, loader, "not a name");
  auto faults = bad.validate();
  ASSERT_FALSE(faults.empty());
  EXPECT_EQ(faults[0].code, Errc::ValidationFailed);
  EXPECT_EQ(faults[0].where, "name");
  Prototype empty(space, loader, "");
  EXPECT_TRUE(has_fault(empty.validate(), Errc::ValidationFailed));
}

TEST_F(PrototypeTest, SneakedInCycleIsAFault) {
  // compose_field can write instance values without the link_child guard;
  // validation still catches the resulting cycle.
  ComposingInstance& a = proto.add_component("a", "std.Probe");
  ComposingInstance& b = proto.add_component("b", "std.Probe");
  proto.compose_field(a, "in", Value(b.live));
  proto.compose_field(b, "in", Value(a.live));
  EXPECT_TRUE(has_fault(proto.validate(), Errc::CycleDetected));
}

TEST_F(PrototypeTest, RevokedRouteRightsAreFaults) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  ComposingInstance& add = proto.add_component("add", "std.Adder");
  proto.add_route("x", "value", "add", "a");
  EXPECT_TRUE(proto.validate().empty());
  proto.restrict_access(add, "a", AccessSet(kWrite));
  auto faults = proto.validate();
  ASSERT_TRUE(has_fault(faults, Errc::AccessViolation));
  EXPECT_NE(faults[0].where.find("route"), std::string::npos);
  (void)x;
}

TEST_F(PrototypeTest, UnboundSourceAfterNarrowingIsAFault) {
  auto x = proto.add_interface_property("x", "Int32", parse_access("RWB"));
  proto.add_component("add", "std.Adder");
  proto.add_route("x", "value", "add", "a");
  proto.restrict_access(x, AccessSet(kBound));
  EXPECT_TRUE(has_fault(proto.validate(), Errc::AccessViolation));
}

TEST_F(PrototypeTest, ValidationReportsMultipleFaults) {
  proto.add_interface_property("hollow", "std.Adder", parse_access("R"));
  ComposingInstance& a = proto.add_component("a", "std.Probe");
  proto.compose_field(a, "in", Value(a.live));  // self-containment
  auto faults = proto.validate();
  EXPECT_GE(faults.size(), 2u);
  EXPECT_TRUE(has_fault(faults, Errc::NotAComponent));
  EXPECT_TRUE(has_fault(faults, Errc::CycleDetected));
}

// --- reads ---

TEST_F(PrototypeTest, GetResolvesNamesAndChecksRights) {
  proto.add_interface_property("x", "Int32", parse_access("RW"), Value(3));
  ComposingInstance& add = proto.add_component("add", "std.Adder");
  EXPECT_EQ(proto.get("x", ""), Value(3));
  EXPECT_EQ(proto.get("add", "a"), Value(0));
  EXPECT_EQ(code_of([&] { proto.get("ghost", ""); }), Errc::UnknownName);
  EXPECT_EQ(code_of([&] { proto.get("add", "ghost"); }), Errc::UnknownProperty);
  EXPECT_EQ(code_of([&] { proto.get("x", "weird"); }), Errc::UnknownProperty);
  proto.restrict_access(add, "a", AccessSet(kRead | kWrite));
  EXPECT_EQ(code_of([&] { proto.get("add", "a"); }), Errc::AccessViolation);
}

}  // namespace
}  // namespace compovm
