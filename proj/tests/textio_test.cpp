#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "compovm/compovm.hpp"

namespace compovm {
namespace {

const char* kDoublerText = R"(type demo.Doubler {
  interface {
    [RWB] Int32 x = 0
    [RB] Int32 y = 0
  }
  impl {
    DEF add std.Adder {
      a: USE x
      b: USE x
      sum: USE y
    }
  }
}
)";

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::SyntaxError;
}

class TextioTest : public ::testing::Test {
 protected:
  TextioTest() { register_standard_kit(*loader); }

  std::shared_ptr<TypeLoader> loader = TypeLoader::create_root();
  Space space;
};

// --- parsing whole files ---

TEST_F(TextioTest, ParsedTypeRunsLikeAHandBuiltOne) {
  ParseResult r = parse(kDoublerText, loader);
  ASSERT_EQ(r.types.size(), 1u);
  EXPECT_FALSE(r.scene);
  TypePtr t = r.types[0];
  EXPECT_EQ(t->name(), "demo.Doubler");
  EXPECT_EQ(t, loader->resolve("demo.Doubler"));
  EXPECT_EQ(t->property(0).access, parse_access("RWB"));

  InstancePtr d = space.instantiate(t);
  space.set(d, "x", Value(4));
  space.pump();
  EXPECT_EQ(space.get(d, "y"), Value(8));
}

TEST_F(TextioTest, LaterTypesSeeEarlierOnes) {
  std::string text = std::string(kDoublerText) +
                     "type demo.Pair {\n"
                     "  interface { [RWB] Int32 x = 0 }\n"
                     "  impl {\n"
                     "    DEF d demo.Doubler { x: USE x }\n"
                     "  }\n"
                     "}\n";
  ParseResult r = parse(text, loader);
  ASSERT_EQ(r.types.size(), 2u);
  EXPECT_EQ(r.types[1]->name(), "demo.Pair");
}

TEST_F(TextioTest, SceneFreezesUnderTheReservedName) {
  parse(kDoublerText, loader);
  ParseResult r = parse("scene {\n  DEF s demo.Doubler {}\n}\n", loader);
  ASSERT_TRUE(r.scene);
  EXPECT_TRUE(r.types.empty());
  EXPECT_EQ(r.scene->name(), "scene");
  InstancePtr sc = space.instantiate(r.scene);
  InstancePtr s = sc->find_inner("s");
  ASSERT_TRUE(s);
  space.set(s, "x", Value(3));
  space.pump();
  EXPECT_EQ(space.get(s, "y"), Value(6));
}

TEST_F(TextioTest, SceneWithRoutesAndValues) {
  ParseResult r = parse(
      "scene {\n"
      "  DEF c std.Const { value: 5 }\n"
      "  DEF p std.Probe {}\n"
      "  route c.value -> p.in\n"
      "}\n",
      loader);
  InstancePtr sc = space.instantiate(r.scene);
  InstancePtr c = sc->find_inner("c");
  EXPECT_EQ(space.get(c, "value"), Value(5));
  space.set(c, "value", Value(6));
  space.pump();
  EXPECT_EQ(space.get(sc->find_inner("p"), "trace"), Value(std::vector<Value>{Value(6)}));
}

TEST_F(TextioTest, OnlyOneSceneAllowed) {
  EXPECT_EQ(code_of([&] { parse("scene {}\nscene {}\n", loader); }), Errc::SyntaxError);
}

TEST_F(TextioTest, CommentsAndWhitespaceAreInvisible) {
  ParseResult r = parse(
      "# heading comment\n"
      "type t.C { # trailing\n"
      "  interface {}  # more\n"
      "  impl {}\n"
      "}# end\n",
      loader);
  EXPECT_EQ(r.types[0]->name(), "t.C");
  EXPECT_EQ(r.types[0]->property_count(), 0);
}

TEST_F(TextioTest, DuplicateTypeNameConflicts) {
  parse(kDoublerText, loader);
  EXPECT_EQ(code_of([&] { parse(kDoublerText, loader); }), Errc::NameConflict);
}

TEST_F(TextioTest, UnknownTypeRefFailsWithLocation) {
  try {
    parse("type t.X {\n  interface {}\n  impl {\n    DEF a no.Such {}\n  }\n}\n", loader);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnresolvedType);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("no.Such"), std::string::npos);
  }
}

// --- syntax errors carry positions ---

TEST_F(TextioTest, SyntaxErrorLocations) {
  try {
    parse("type t.X {\n  interface { [QQ] Int32 x = 0 }\n  impl {}\n}\n", loader);
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2);  // points at the flag block
  }
  EXPECT_EQ(code_of([&] { parse("type t.Y {", loader); }), Errc::SyntaxError);
  EXPECT_EQ(code_of([&] { parse("bogus", loader); }), Errc::SyntaxError);
  EXPECT_EQ(code_of([&] { parse("type t.Z {}", loader); }), Errc::SyntaxError);
}

TEST_F(TextioTest, UseOfUnknownNameIsASyntaxError) {
  EXPECT_EQ(code_of([&] {
              parse("type t.X {\n  interface {}\n  impl {\n"
                    "    DEF a std.Adder { a: USE ghost }\n  }\n}\n",
                    loader);
            }),
            Errc::SyntaxError);
}

TEST_F(TextioTest, CommasAreCalledOut) {
  try {
    parse("type t.X {\n  interface { [RW IR] Int32[] xs = [1, 2] }\n  impl {}\n}\n", loader);
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_NE(std::string(e.what()).find("separate values with spaces"), std::string::npos);
  }
}

TEST_F(TextioTest, StringAndNumberLexerErrors) {
  EXPECT_EQ(code_of([&] { parse("type t.A { interface { [RW] String s = \"open", loader); }),
            Errc::SyntaxError);
  EXPECT_EQ(code_of([&] {
              parse("type t.B { interface { [RW] Int32 x = 99999999999 } impl {} }", loader);
            }),
            Errc::SyntaxError);
  EXPECT_EQ(code_of([&] {
              parse("type t.C { interface { [RW] Int32 x = - } impl {} }", loader);
            }),
            Errc::SyntaxError);
}

// --- literal forms ---

TEST_F(TextioTest, LiteralTextParsesEveryForm) {
  EXPECT_EQ(parse_literal_text("42"), Value(42));
  EXPECT_EQ(parse_literal_text("-7"), Value(-7));
  EXPECT_EQ(parse_literal_text("0"), Value(0));
  EXPECT_EQ(parse_literal_text("2.5"), Value(2.5));
  EXPECT_EQ(parse_literal_text("-1.5e3"), Value(-1500.0));
  EXPECT_EQ(parse_literal_text("1e2"), Value(100.0));
  EXPECT_EQ(parse_literal_text("true"), Value(true));
  EXPECT_EQ(parse_literal_text("false"), Value(false));
  EXPECT_EQ(parse_literal_text("\"a\\nb\\\"c\""), Value("a\nb\"c"));
  EXPECT_EQ(parse_literal_text("[]"), Value(std::vector<Value>{}));
  EXPECT_EQ(parse_literal_text("[1 2 3]"), Value(std::vector<Value>{Value(1), Value(2), Value(3)}));
  EXPECT_EQ(parse_literal_text("[[1] [true \"x\"]]"),
            Value(std::vector<Value>{Value(std::vector<Value>{Value(1)}),
                                     Value(std::vector<Value>{Value(true), Value("x")})}));
}

TEST_F(TextioTest, LiteralTextRejectsJunk) {
  EXPECT_EQ(code_of([] { parse_literal_text(""); }), Errc::SyntaxError);
  EXPECT_EQ(code_of([] { parse_literal_text("1 2"); }), Errc::SyntaxError);
  EXPECT_EQ(code_of([] { parse_literal_text("name"); }), Errc::SyntaxError);
  EXPECT_EQ(code_of([] { parse_literal_text("[1"); }), Errc::SyntaxError);
}

TEST_F(TextioTest, LiteralAndTextRoundTrip) {
  for (const char* lit : {"42", "-7", "2.5", "true", "\"a\\nb\"", "[1 2 3]", "[]",
                          "[[1 2] [\"x\"]]", "1e+100"}) {
    Value v = parse_literal_text(lit);
    EXPECT_EQ(parse_literal_text(to_literal(v)), v) << lit;
  }
}

TEST_F(TextioTest, FloatAndIntLiteralsStayDistinct) {
  ParseResult r = parse(
      "type t.F {\n"
      "  interface { [RW] Float64 f = 1.0 }\n"
      "  impl {}\n"
      "}\n",
      loader);
  EXPECT_EQ(r.types[0]->property(0).defaultValue, Value(1.0));
  // An int literal has no business in a Float64 slot.
  EXPECT_EQ(code_of([&] {
              parse("type t.G { interface { [RW] Float64 f = 1 } impl {} }", loader);
            }),
            Errc::TypeMismatch);
}

TEST_F(TextioTest, ArrayDefaultsInInterfaces) {
  ParseResult r = parse(
      "type t.Arr {\n"
      "  interface { [RWB IR IW] Int32[] xs = [10 20] }\n"
      "  impl {}\n"
      "}\n",
      loader);
  InstancePtr i = space.instantiate(r.types[0]);
  EXPECT_EQ(space.get_indexed(i, "xs", 1), Value(20));
  space.set_indexed(i, "xs", 0, Value(11));
  EXPECT_EQ(space.get(i, "xs"), Value(std::vector<Value>{Value(11), Value(20)}));
}

// --- impl items ---

TEST_F(TextioTest, AnonymousAndNestedNodes) {
  ParseResult r = parse(
      "type t.Nest {\n"
      "  interface {}\n"
      "  impl {\n"
      "    std.Const { value: 9 }\n"
      "    DEF p std.Probe { in: std.Adder { a: 1 } }\n"
      "  }\n"
      "}\n",
      loader);
  InstancePtr i = space.instantiate(r.types[0]);
  ASSERT_EQ(i->inner().size(), 3u);  // anon const, anon adder, p
  InstancePtr p = i->find_inner("p");
  Value in = space.get(p, "in");
  ASSERT_TRUE(in.is_instance());
  EXPECT_EQ(in.as_instance()->type()->name(), "std.Adder");
  EXPECT_EQ(space.get(in.as_instance(), "sum"), Value(1));
}

TEST_F(TextioTest, UseOfADefLinksTheChild) {
  ParseResult r = parse(
      "type t.Link {\n"
      "  interface {}\n"
      "  impl {\n"
      "    DEF child std.Const { value: 4 }\n"
      "    DEF p std.Probe { in: USE child }\n"
      "  }\n"
      "}\n",
      loader);
  InstancePtr i = space.instantiate(r.types[0]);
  EXPECT_EQ(space.get(i->find_inner("p"), "in").as_instance(), i->find_inner("child"));
}

TEST_F(TextioTest, DefsInsideArrays) {
  ParseResult r = parse(
      "type t.Bag {\n"
      "  interface {}\n"
      "  impl {\n"
      "    DEF a std.Const {}\n"
      "    DEF p std.Probe { in: [USE a DEF b std.Const {} 7] }\n"
      "  }\n"
      "}\n",
      loader);
  InstancePtr i = space.instantiate(r.types[0]);
  Value in = space.get(i->find_inner("p"), "in");
  ASSERT_EQ(in.elements().size(), 3u);
  EXPECT_EQ(in.elements()[0].as_instance(), i->find_inner("a"));
  EXPECT_EQ(in.elements()[1].as_instance(), i->find_inner("b"));
  EXPECT_EQ(in.elements()[2], Value(7));
}

TEST_F(TextioTest, InterfaceUseInsideArraysIsRejected) {
  EXPECT_EQ(code_of([&] {
              parse("type t.Bad {\n"
                    "  interface { [RWB] Int32 x = 0 }\n"
                    "  impl {\n"
                    "    DEF p std.Probe { in: [USE x] }\n"
                    "  }\n"
                    "}\n",
                    loader);
            }),
            Errc::SyntaxError);
}

TEST_F(TextioTest, RoutesValidateEndpointsAtParse) {
  EXPECT_EQ(code_of([&] {
              parse("type t.R1 { interface {} impl { route a.out -> b.in } }", loader);
            }),
            Errc::SyntaxError);  // unknown def names
  EXPECT_EQ(code_of([&] {
              parse("type t.R2 {\n  interface {}\n  impl {\n"
                    "    DEF a std.Adder {}\n    DEF b std.Adder {}\n"
                    "    route a.a -> b.a\n  }\n}\n",
                    loader);
            }),
            Errc::AccessViolation);  // a.a is not bound
}

// --- rendering ---

TEST_F(TextioTest, WriteTypeProducesCanonicalText) {
  ParseResult r = parse(kDoublerText, loader);
  EXPECT_EQ(write_type(r.types[0]), kDoublerText);
}

TEST_F(TextioTest, WriteTypeIsAFixpointThroughReparse) {
  std::string text =
      "type t.Fix {\n"
      "  interface {\n"
      "    [RWB] Int32 x = 3\n"
      "    [RW IR IW] Int32[] xs = [1 2]\n"
      "    [RW] Float64 f = 0.5\n"
      "    [RW] String s = \"line\\n2\"\n"
      "    [RW] Boolean b = true\n"
      "  }\n"
      "  impl {\n"
      "    DEF c std.Const {\n"
      "      value: 4\n"
      "    }\n"
      "    DEF p std.Probe {\n"
      "      in: USE c\n"
      "    }\n"
      "    route x.value -> c.value\n"
      "    route c.value -> p.in\n"
      "  }\n"
      "}\n";
  ParseResult r1 = parse(text, loader);
  std::string once = write_type(r1.types[0]);
  auto loader2 = TypeLoader::create_root();
  register_standard_kit(*loader2);
  ParseResult r2 = parse(once, loader2);
  EXPECT_EQ(write_type(r2.types[0]), once);
}

TEST_F(TextioTest, EmptyBlocksRenderCompactly) {
  ParseResult r = parse("type t.Empty { interface {} impl {} }", loader);
  EXPECT_EQ(write_type(r.types[0]), "type t.Empty {\n  interface {}\n  impl {}\n}\n");
}

TEST_F(TextioTest, OnlyComposedTypesSerialize) {
  EXPECT_EQ(code_of([&] { write_type(loader->resolve("std.Adder")); }), Errc::NotSerializable);
  EXPECT_EQ(code_of([&] { write_type(loader->resolve("Int32")); }), Errc::NotSerializable);
}

TEST_F(TextioTest, WiringWithoutTextFormRefusesToSerialize) {
  // Anonymous share group: two inner slots share a cell, no interface link.
  {
    Prototype p(space, loader, "t.G1");
    ComposingInstance& c = p.add_component("c", "std.Const");
    ComposingInstance& a = p.add_component("a", "std.Adder");
    p.share_property(a, "b", c.slot("value"));
    TypePtr t = create_from_prototype(p);
    EXPECT_EQ(code_of([&] { write_type(t); }), Errc::NotSerializable);
  }
  // Narrowed inner access.
  {
    Prototype p(space, loader, "t.G2");
    ComposingInstance& c = p.add_component("c", "std.Const");
    p.restrict_access(c, "value", AccessSet(kWrite));
    TypePtr t = create_from_prototype(p);
    EXPECT_EQ(code_of([&] { write_type(t); }), Errc::NotSerializable);
  }
  // Instance-valued interface default.
  {
    Prototype p(space, loader, "t.G3");
    InstancePtr adder = space.instantiate(loader->resolve("std.Adder"));
    p.add_interface_property("inner", "std.Adder", parse_access("R"), Value(adder));
    TypePtr t = create_from_prototype(p);
    EXPECT_EQ(code_of([&] { write_type(t); }), Errc::NotSerializable);
  }
  // var<T>-typed interface property: the name has no text form.
  {
    Prototype p(space, loader, "t.G4");
    p.add_interface_property("v", loader->resolve("var<Int32>"), parse_access("R"),
                             Value(space.instantiate(loader->resolve("var<Int32>"))));
    TypePtr t = create_from_prototype(p);
    EXPECT_EQ(code_of([&] { write_type(t); }), Errc::NotSerializable);
  }
}

TEST_F(TextioTest, FixtureFilesRoundTrip) {
  for (const char* rel : {"/demo/Doubler.cvm", "/demo/Quadrupler.cvm"}) {
    auto l = TypeLoader::create_root();
    register_standard_kit(*l);
    l->add_source(make_file_source({FIXTURES_DIR}));
    std::ifstream f(std::string(FIXTURES_DIR) + rel);
    ASSERT_TRUE(f) << rel;
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ParseResult r = parse(text, l);
    ASSERT_FALSE(r.types.empty()) << rel;
    std::string once = write_type(r.types.back());

    auto l2 = TypeLoader::create_root();
    register_standard_kit(*l2);
    l2->add_source(make_file_source({FIXTURES_DIR}));
    ParseResult r2 = parse(once, l2);
    EXPECT_EQ(write_type(r2.types.back()), once) << rel;
  }
}

// --- the file source ---

class FileSourceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = std::filesystem::temp_directory_path() / "compovm_textio_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "a" / "b");
    loader = TypeLoader::create_root();
    register_standard_kit(*loader);
    loader->add_source(make_file_source({dir.string()}));
  }
  void TearDown() override { std::filesystem::remove_all(dir); }

  void put(const std::string& rel, const std::string& text) {
    std::ofstream f(dir / rel);
    f << text;
  }

  std::filesystem::path dir;
  std::shared_ptr<TypeLoader> loader;
  Space space;
};

TEST_F(FileSourceTest, ResolvesDottedNamesToPaths) {
  put("a/b/C.cvm", "type a.b.C { interface { [RW] Int32 n = 1 } impl {} }");
  TypePtr t = loader->resolve("a.b.C");
  EXPECT_EQ(t->property(0).defaultValue, Value(1));
  EXPECT_EQ(t, loader->resolve("a.b.C"));  // cached
}

TEST_F(FileSourceTest, FileMayPullInMoreFiles) {
  put("a/Outer.cvm",
      "type a.Outer {\n  interface { [RWB] Int32 x = 0 }\n"
      "  impl { DEF i a.b.C {} }\n}\n");
  put("a/b/C.cvm", "type a.b.C { interface { [RW] Int32 n = 1 } impl {} }");
  TypePtr t = loader->resolve("a.Outer");
  EXPECT_TRUE(loader->try_resolve("a.b.C"));  // loaded as a dependency
  InstancePtr i = space.instantiate(t);
  EXPECT_EQ(space.get(i->find_inner("i"), "n"), Value(1));
}

TEST_F(FileSourceTest, MissingFileIsAMissNotAnError) {
  EXPECT_FALSE(loader->try_resolve("a.b.Missing"));
}

TEST_F(FileSourceTest, WrongContentIsDiagnosed) {
  put("a/b/C.cvm", "type a.b.Other { interface {} impl {} }");
  try {
    loader->resolve("a.b.C");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnresolvedType);
    EXPECT_NE(std::string(e.what()).find("does not define"), std::string::npos);
  }
}

}  // namespace
}  // namespace compovm
