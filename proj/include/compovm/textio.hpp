#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "compovm/composed.hpp"
#include "compovm/composer.hpp"
#include "compovm/errors.hpp"
#include "compovm/loader.hpp"
#include "compovm/prototype.hpp"
#include "compovm/runtime.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

namespace textio {

struct Token {
  enum Kind { Ident, IntLit, FloatLit, StrLit, Punct, End };
  Kind kind = End;
  std::string text;  // ident name or punctuation spelling
  Value value;       // literal tokens only
  int line = 1;
  int col = 1;
};

/// Hand-rolled scanner for the component text format. `#` starts a comment
/// that runs to end of line. Punctuation is single characters plus "->".
class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { cur_ = scan(); }

  const Token& peek() const { return cur_; }

  Token next() {
    Token t = cur_;
    cur_ = scan();
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(line_, col_, msg); }

  bool done() const { return pos_ >= src_.size(); }
  char at() const { return src_[pos_]; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (!done()) {
      char c = at();
      if (c == '#') {
        while (!done() && at() != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  Token scan() {
    skip_blank();
    Token t;
    t.line = line_;
    t.col = col_;
    if (done()) return t;
    char c = at();
    if (ident_start(c)) {
      t.kind = Token::Ident;
      while (!done() && ident_char(at())) {
        t.text += at();
        advance();
      }
      return t;
    }
    if (digit(c) || c == '-') {
      if (c == '-') {
        size_t look = pos_ + 1;
        if (look < src_.size() && src_[look] == '>') {
          advance();
          advance();
          t.kind = Token::Punct;
          t.text = "->";
          return t;
        }
        if (look >= src_.size() || !digit(src_[look])) fail("stray '-'");
      }
      return scan_number(t);
    }
    if (c == '"') return scan_string(t);
    switch (c) {
      case '{': case '}': case '[': case ']': case ':': case '.': case '=': case ',': {
        if (c == ',') fail("',' is not part of the format; separate values with spaces");
        t.kind = Token::Punct;
        t.text = std::string(1, c);
        advance();
        return t;
      }
      default:
        fail(std::string("unexpected character '") + c + "'");
    }
  }

  Token scan_number(Token t) {
    std::string text;
    if (at() == '-') {
      text += '-';
      advance();
    }
    while (!done() && digit(at())) {
      text += at();
      advance();
    }
    bool isFloat = false;
    if (!done() && at() == '.') {
      // A dot only belongs to the number when digits follow; "1.x" is the
      // integer 1 and a qualified name continues.
      if (pos_ + 1 < src_.size() && digit(src_[pos_ + 1])) {
        isFloat = true;
        text += '.';
        advance();
        while (!done() && digit(at())) {
          text += at();
          advance();
        }
      }
    }
    if (!done() && (at() == 'e' || at() == 'E')) {
      isFloat = true;
      text += at();
      advance();
      if (!done() && (at() == '+' || at() == '-')) {
        text += at();
        advance();
      }
      if (done() || !digit(at())) fail("malformed exponent");
      while (!done() && digit(at())) {
        text += at();
        advance();
      }
    }
    try {
      if (isFloat) {
        t.kind = Token::FloatLit;
        t.value = Value(std::stod(text));
      } else {
        t.kind = Token::IntLit;
        long long n = std::stoll(text);
        if (n < std::numeric_limits<int32_t>::min() || n > std::numeric_limits<int32_t>::max())
          fail("integer literal out of range: " + text);
        t.value = Value(static_cast<int32_t>(n));
      }
    } catch (const std::out_of_range&) {
      fail("numeric literal out of range: " + text);
    }
    return t;
  }

  Token scan_string(Token t) {
    advance();  // opening quote
    std::string s;
    while (true) {
      if (done() || at() == '\n') fail("unterminated string");
      char c = at();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (done()) fail("unterminated string");
        char e = at();
        advance();
        switch (e) {
          case '"': s += '"'; break;
          case '\\': s += '\\'; break;
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      } else {
        s += c;
      }
    }
    t.kind = Token::StrLit;
    t.value = Value(std::move(s));
    return t;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token cur_;
};

}  // namespace textio

struct ParseResult {
  std::vector<TypePtr> types;  // frozen typedefs, in file order
  TypePtr scene;               // frozen scene block, if the file has one
};

/// Parses a component file: typedefs are composed, frozen and registered
/// with the loader as they complete, so later definitions can use earlier
/// ones. A scene block freezes into a type named "scene".
class Parser {
 public:
  Parser(const std::string& src, std::shared_ptr<TypeLoader> loader)
      : lex_(src), loader_(std::move(loader)) {}

  ParseResult run() {
    ParseResult out;
    while (lex_.peek().kind != textio::Token::End) {
      textio::Token t = lex_.peek();
      if (t.kind != textio::Token::Ident)
        throw SyntaxError(t.line, t.col, "expected 'type' or 'scene'");
      if (t.text == "type") {
        lex_.next();
        parse_typedef(out);
      } else if (t.text == "scene") {
        if (out.scene)
          throw SyntaxError(t.line, t.col, "a file can hold only one scene");
        lex_.next();
        parse_scene(out);
      } else {
        throw SyntaxError(t.line, t.col, "expected 'type' or 'scene', got '" + t.text + "'");
      }
    }
    return out;
  }

 private:
  using Token = textio::Token;

  Token expect_punct(const std::string& p) {
    Token t = lex_.next();
    if (t.kind != Token::Punct || t.text != p)
      throw SyntaxError(t.line, t.col, "expected '" + p + "'");
    return t;
  }

  Token expect_ident(const std::string& what) {
    Token t = lex_.next();
    if (t.kind != Token::Ident)
      throw SyntaxError(t.line, t.col, "expected " + what);
    return t;
  }

  void expect_keyword(const std::string& kw) {
    Token t = expect_ident("'" + kw + "'");
    if (t.text != kw) throw SyntaxError(t.line, t.col, "expected '" + kw + "'");
  }

  bool peek_punct(const std::string& p) const {
    return lex_.peek().kind == Token::Punct && lex_.peek().text == p;
  }

  std::string parse_qname() {
    std::string name = expect_ident("a name").text;
    while (peek_punct(".")) {
      lex_.next();
      name += "." + expect_ident("a name segment").text;
    }
    return name;
  }

  TypePtr parse_typeref() {
    Token at = lex_.peek();
    std::string name = parse_qname();
    if (peek_punct("[")) {
      lex_.next();
      expect_punct("]");
      name += "[]";
    }
    TypePtr t = loader_->try_resolve(name);
    if (!t)
      throw Error(Errc::UnresolvedType, "line " + std::to_string(at.line) + ", col " +
                                            std::to_string(at.col) + ": unknown type " + name);
    return t;
  }

  AccessSet parse_flags() {
    Token open = expect_punct("[");
    std::string flags;
    while (!peek_punct("]")) {
      Token t = lex_.next();
      if (t.kind != Token::Ident)
        throw SyntaxError(t.line, t.col, "expected access flags");
      if (!flags.empty()) flags += " ";
      flags += t.text;
    }
    expect_punct("]");
    try {
      return parse_access(flags);
    } catch (const Error& e) {
      throw SyntaxError(open.line, open.col, e.what());
    }
  }

  Value parse_literal() {
    Token t = lex_.peek();
    if (t.kind == Token::IntLit || t.kind == Token::FloatLit || t.kind == Token::StrLit)
      return lex_.next().value;
    if (t.kind == Token::Ident && (t.text == "true" || t.text == "false")) {
      lex_.next();
      return Value(t.text == "true");
    }
    if (t.kind == Token::Punct && t.text == "[") {
      lex_.next();
      std::vector<Value> xs;
      while (!peek_punct("]")) xs.push_back(parse_literal());
      lex_.next();
      return Value(std::move(xs));
    }
    throw SyntaxError(t.line, t.col, "expected a literal");
  }

  void parse_typedef(ParseResult& out) {
    std::string name = parse_qname();
    Prototype proto(scratch_, loader_, name);
    expect_punct("{");
    expect_keyword("interface");
    expect_punct("{");
    while (!peek_punct("}")) parse_interface_prop(proto);
    lex_.next();
    expect_keyword("impl");
    expect_punct("{");
    parse_impl_items(proto);
    lex_.next();
    expect_punct("}");
    out.types.push_back(create_from_prototype(proto));
  }

  void parse_scene(ParseResult& out) {
    Prototype proto(scratch_, loader_, "scene");
    expect_punct("{");
    parse_impl_items(proto);
    lex_.next();
    out.scene = create_from_prototype(proto);
  }

  void parse_interface_prop(Prototype& proto) {
    AccessSet access = parse_flags();
    TypePtr vt = parse_typeref();
    std::string name = expect_ident("a property name").text;
    std::optional<Value> def;
    if (peek_punct("=")) {
      lex_.next();
      def = parse_literal();
    }
    proto.add_interface_property(name, vt, access, std::move(def));
  }

  void parse_impl_items(Prototype& proto) {
    while (!peek_punct("}")) {
      Token t = lex_.peek();
      if (t.kind != Token::Ident)
        throw SyntaxError(t.line, t.col, "expected DEF, route or a node");
      if (t.text == "route") {
        lex_.next();
        parse_route(proto);
      } else {
        parse_node(proto);
      }
    }
  }

  /// node := ["DEF" NAME] TYPEREF "{" {slot} "}". Unnamed nodes get a
  /// generated def name so they can be referenced internally.
  std::string parse_node(Prototype& proto) {
    std::string defName;
    if (lex_.peek().kind == Token::Ident && lex_.peek().text == "DEF") {
      lex_.next();
      defName = expect_ident("a DEF name").text;
    } else {
      defName = "_anon" + std::to_string(++anonCounter_);
    }
    TypePtr t = parse_typeref();
    ComposingInstance& c = proto.add_component(defName, t);
    expect_punct("{");
    while (!peek_punct("}")) parse_slot(proto, c);
    lex_.next();
    return defName;
  }

  void parse_slot(Prototype& proto, ComposingInstance& c) {
    Token nameTok = expect_ident("a property name");
    expect_punct(":");
    Token v = lex_.peek();
    if (v.kind == Token::Ident && v.text == "USE") {
      lex_.next();
      Token target = expect_ident("a name after USE");
      apply_use(proto, c, nameTok.text, target);
    } else if (v.kind == Token::Ident && v.text == "DEF") {
      std::string child = parse_node(proto);
      proto.link_child(c, nameTok.text, child);
    } else if (v.kind == Token::Ident && v.text != "true" && v.text != "false") {
      std::string child = parse_node(proto);  // inline anonymous node
      proto.link_child(c, nameTok.text, child);
    } else if (v.kind == Token::Punct && v.text == "[") {
      proto.compose_field(c, nameTok.text, parse_value_array(proto));
    } else {
      proto.compose_field(c, nameTok.text, parse_literal());
    }
  }

  void apply_use(Prototype& proto, ComposingInstance& c, const std::string& slot,
                 const Token& target) {
    if (PropertyPrototypePtr p = proto.find_interface(target.text)) {
      proto.share_property(c, slot, p);
      return;
    }
    if (proto.find_composing(target.text)) {
      proto.link_child(c, slot, target.text);
      return;
    }
    throw SyntaxError(target.line, target.col, "unknown name '" + target.text + "'");
  }

  /// Array slot values may mix literals with DEF / inline nodes / USE of a
  /// def; containment then runs through the array.
  Value parse_value_array(Prototype& proto) {
    expect_punct("[");
    std::vector<Value> xs;
    while (!peek_punct("]")) {
      Token t = lex_.peek();
      if (t.kind == Token::Ident && t.text == "USE") {
        lex_.next();
        Token target = expect_ident("a name after USE");
        ComposingInstance* child = proto.find_composing(target.text);
        if (!child) {
          if (proto.find_interface(target.text))
            throw SyntaxError(target.line, target.col,
                              "an interface property cannot be shared inside an array");
          throw SyntaxError(target.line, target.col, "unknown name '" + target.text + "'");
        }
        xs.push_back(Value(child->live));
      } else if (t.kind == Token::Ident && t.text == "DEF") {
        std::string child = parse_node(proto);
        xs.push_back(Value(proto.find_composing(child)->live));
      } else if (t.kind == Token::Ident && t.text != "true" && t.text != "false") {
        std::string child = parse_node(proto);
        xs.push_back(Value(proto.find_composing(child)->live));
      } else if (t.kind == Token::Punct && t.text == "[") {
        xs.push_back(parse_value_array(proto));
      } else {
        xs.push_back(parse_literal());
      }
    }
    lex_.next();
    return Value(std::move(xs));
  }

  void parse_route(Prototype& proto) {
    Token src = expect_ident("a route source");
    expect_punct(".");
    std::string srcProp = expect_ident("a source property").text;
    expect_punct("->");
    Token dst = expect_ident("a route target");
    expect_punct(".");
    std::string dstProp = expect_ident("a target property").text;
    if (!proto.find_interface(src.text) && !proto.find_composing(src.text))
      throw SyntaxError(src.line, src.col, "unknown name '" + src.text + "'");
    if (!proto.find_interface(dst.text) && !proto.find_composing(dst.text))
      throw SyntaxError(dst.line, dst.col, "unknown name '" + dst.text + "'");
    proto.add_route(src.text, srcProp, dst.text, dstProp);
  }

  textio::Lexer lex_;
  std::shared_ptr<TypeLoader> loader_;
  Space scratch_;
  int anonCounter_ = 0;
};

inline ParseResult parse(const std::string& src, const std::shared_ptr<TypeLoader>& loader) {
  return Parser(src, loader).run();
}

/// Parses a single standalone literal, as used by scripts and the shell.
inline Value parse_literal_text(const std::string& s) {
  textio::Lexer lex(s);
  struct Mini {
    textio::Lexer& lex;
    Value run() {
      Value v = lit();
      const textio::Token& rest = lex.peek();
      if (rest.kind != textio::Token::End)
        throw SyntaxError(rest.line, rest.col, "trailing input after literal");
      return v;
    }
    Value lit() {
      textio::Token t = lex.next();
      switch (t.kind) {
        case textio::Token::IntLit:
        case textio::Token::FloatLit:
        case textio::Token::StrLit:
          return t.value;
        case textio::Token::Ident:
          if (t.text == "true") return Value(true);
          if (t.text == "false") return Value(false);
          break;
        case textio::Token::Punct:
          if (t.text == "[") {
            std::vector<Value> xs;
            while (!(lex.peek().kind == textio::Token::Punct && lex.peek().text == "]"))
              xs.push_back(lit());
            lex.next();
            return Value(std::move(xs));
          }
          break;
        default:
          break;
      }
      throw SyntaxError(t.line, t.col, "expected a literal");
    }
  };
  return Mini{lex}.run();
}

namespace textio {

inline std::string typeref_text(const TypePtr& t) {
  const std::string& n = t->name();
  if (n.find('<') != std::string::npos)
    throw Error(Errc::NotSerializable, n + " has no text form");
  return n;
}

inline bool holds_instance(const Value& v) {
  if (v.is_instance()) return true;
  if (v.is_array())
    for (const Value& e : v.elements())
      if (holds_instance(e)) return true;
  return false;
}

inline std::string literal_text(const Value& v, const std::string& where) {
  if (holds_instance(v))
    throw Error(Errc::NotSerializable, where + " holds an instance; instances have no literal");
  return to_literal(v);
}

inline std::string frozen_text(const FrozenValue& fv, const ComposedImplementation& impl,
                               const std::string& where) {
  if (std::holds_alternative<Value>(fv.v)) return literal_text(std::get<Value>(fv.v), where);
  if (std::holds_alternative<int>(fv.v))
    return "USE " + impl.composing[static_cast<size_t>(std::get<int>(fv.v))].defName;
  std::string s = "[";
  const auto& xs = std::get<std::vector<FrozenValue>>(fv.v);
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += " ";
    s += frozen_text(xs[i], impl, where);
  }
  return s + "]";
}

}  // namespace textio

/// Renders a composed type in its canonical text form. Composed types are
/// the only serializable kind; wiring with no text counterpart (anonymous
/// share groups, narrowed inner access, instance-valued defaults) refuses
/// with NotSerializable.
inline std::string write_type(const TypePtr& t) {
  if (t->kind() != TypeKind::Composed)
    throw Error(Errc::NotSerializable, t->name() + " is not a composed type");
  const ComposedImplementation& impl = *t->composed_impl();
  std::string out = "type " + t->name() + " {\n";

  if (t->property_count() == 0) {
    out += "  interface {}\n";
  } else {
    out += "  interface {\n";
    for (int i = 0; i < t->property_count(); ++i) {
      const PropertyType& pt = t->property(i);
      out += "    [" + pt.access.to_string() + "] " + textio::typeref_text(pt.valueType) + " " +
             pt.name + " = " + textio::literal_text(pt.defaultValue, t->name() + "." + pt.name) +
             "\n";
    }
    out += "  }\n";
  }

  if (impl.composing.empty() && impl.routes.empty()) {
    out += "  impl {}\n";
  } else {
    out += "  impl {\n";
    for (const ComposingTypeSpec& cs : impl.composing) {
      std::vector<std::string> slots;
      for (int i = 0; i < cs.type->property_count(); ++i) {
        const PropertyRefinement& r = cs.refined[static_cast<size_t>(i)];
        const PropertyType& pt = cs.type->property(i);
        std::string where = t->name() + "/" + cs.defName + "." + pt.name;
        if (!(r.access == pt.access))
          throw Error(Errc::NotSerializable, where + ": narrowed inner access has no text form");
        if (r.shareGroup >= 0)
          throw Error(Errc::NotSerializable,
                      where + ": anonymous share group has no text form");
        if (r.externalLink >= 0) {
          slots.push_back(pt.name + ": USE " + t->property(r.externalLink).name);
        } else if (r.override) {
          slots.push_back(pt.name + ": " + textio::frozen_text(*r.override, impl, where));
        }
      }
      if (slots.empty()) {
        out += "    DEF " + cs.defName + " " + textio::typeref_text(cs.type) + " {}\n";
      } else {
        out += "    DEF " + cs.defName + " " + textio::typeref_text(cs.type) + " {\n";
        for (const std::string& s : slots) out += "      " + s + "\n";
        out += "    }\n";
      }
    }
    for (const RouteSpec& r : impl.routes) {
      auto end = [&](int def, int prop) {
        if (def < 0) return t->property(prop).name + ".value";
        const ComposingTypeSpec& cs = impl.composing[static_cast<size_t>(def)];
        return cs.defName + "." + cs.type->property(prop).name;
      };
      out += "    route " + end(r.srcDef, r.srcProp) + " -> " + end(r.dstDef, r.dstProp) + "\n";
    }
    out += "  }\n";
  }
  out += "}\n";
  return out;
}

/// Resolves dotted type names against .cvm files under the given
/// directories: a.b.C maps to a/b/C.cvm, first directory wins. A file that
/// exists but does not define the requested type is an error, not a miss.
inline TypeLoader::Source make_file_source(std::vector<std::string> dirs) {
  return [dirs = std::move(dirs)](TypeLoader& l, const std::string& name) -> TypePtr {
    std::string rel;
    for (char c : name) rel += (c == '.') ? '/' : c;
    rel += ".cvm";
    for (const auto& dir : dirs) {
      std::filesystem::path path = std::filesystem::path(dir) / rel;
      std::ifstream f(path);
      if (!f) continue;
      std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      ParseResult r = parse(text, l.shared_from_this());
      for (const auto& t : r.types)
        if (t->name() == name) return t;
      throw Error(Errc::UnresolvedType, path.string() + " does not define " + name);
    }
    return nullptr;
  };
}

}  // namespace compovm
