#pragma once

#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "compovm/composer.hpp"
#include "compovm/errors.hpp"
#include "compovm/kit.hpp"
#include "compovm/loader.hpp"
#include "compovm/prototype.hpp"
#include "compovm/runtime.hpp"
#include "compovm/textio.hpp"
#include "compovm/type.hpp"
#include "compovm/value.hpp"

namespace compovm {

/// Root loader with the standard kit, plus a child that resolves user types
/// from .cvm files on the given directories.
inline std::shared_ptr<TypeLoader> make_cli_loader(const std::vector<std::string>& typePath) {
  auto root = TypeLoader::create_root();
  register_standard_kit(*root);
  auto user = TypeLoader::create_child(root);
  if (!typePath.empty()) user->add_source(make_file_source(typePath));
  return user;
}

namespace cli_detail {

inline std::string strip_line(const std::string& line) {
  std::string s = line.substr(0, line.find('#'));
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::pair<std::string, std::string> split_path(const std::string& path) {
  size_t dot = path.find('.');
  if (dot == std::string::npos) return {path, ""};
  return {path.substr(0, dot), path.substr(dot + 1)};
}

inline std::pair<InstancePtr, int> scene_path(const InstancePtr& scene,
                                              const std::string& path) {
  auto [def, prop] = split_path(path);
  if (prop.empty())
    throw Error(Errc::UnknownName, "path must be defName.propName: " + path);
  InstancePtr inner = scene->find_inner(def);
  if (!inner) throw Error(Errc::UnknownName, "scene has no DEF named " + def);
  return {inner, inner->index_of(prop)};
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::UnknownName, "cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace cli_detail

inline int run_script(Space& space, const InstancePtr& scene, std::istream& sf,
                      std::ostream& out, std::ostream& err) {
  std::string line;
  int lineNo = 0;
  while (std::getline(sf, line)) {
    ++lineNo;
    std::string body = cli_detail::strip_line(line);
    if (body.empty()) continue;
    std::istringstream ls(body);
    std::string verb;
    ls >> verb;
    try {
      if (verb == "set") {
        std::string path, lit;
        ls >> path;
        std::getline(ls, lit);
        auto [inst, prop] = cli_detail::scene_path(scene, path);
        space.set(inst, prop, parse_literal_text(lit));
        space.pump();
      } else if (verb == "expect") {
        std::string path, lit;
        ls >> path;
        std::getline(ls, lit);
        Value want = parse_literal_text(lit);
        auto [inst, prop] = cli_detail::scene_path(scene, path);
        Value got = space.get(inst, prop);
        if (got == want) {
          out << "ok " << path << " = " << to_literal(got) << "\n";
        } else {
          out << "FAIL " << path << " expected " << to_literal(want) << " actual "
              << to_literal(got) << "\n";
          return 1;
        }
      } else if (verb == "pump") {
        space.pump();
      } else if (verb == "trace") {
        std::string path;
        ls >> path;
        auto [inst, prop] = cli_detail::scene_path(scene, path);
        out << path << " = " << to_literal(space.get(inst, prop)) << "\n";
      } else {
        throw Error(Errc::SyntaxError, "unknown script verb '" + verb + "'");
      }
    } catch (const Error& e) {
      err << "script line " << lineNo << ": " << e.what() << "\n";
      return 2;
    }
  }
  return 0;
}

/// `compovm run`: parse the given files (exactly one scene among them),
/// instantiate the scene and drive it with the stimulus script.
inline int cmd_run(const std::vector<std::string>& files, const std::string& scriptPath,
                   const std::vector<std::string>& typePath, std::ostream& out,
                   std::ostream& err) {
  try {
    auto loader = make_cli_loader(typePath);
    TypePtr sceneType;
    int scenes = 0;
    for (const auto& f : files) {
      ParseResult r = parse(cli_detail::read_file(f), loader);
      if (r.scene) {
        ++scenes;
        sceneType = r.scene;
      }
    }
    if (scenes != 1) {
      err << "error: expected exactly one scene block, found " << scenes << "\n";
      return 2;
    }
    Space space;
    InstancePtr scene = space.instantiate(sceneType);
    space.pump();
    if (scriptPath.empty()) return 0;
    std::ifstream sf(scriptPath);
    if (!sf) {
      err << "error: cannot open " << scriptPath << "\n";
      return 2;
    }
    return run_script(space, scene, sf, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

/// `compovm types list|show NAME`.
inline int cmd_types(const std::string& action, const std::string& name,
                     const std::vector<std::string>& typePath, std::ostream& out,
                     std::ostream& err) {
  auto loader = make_cli_loader(typePath);
  if (action == "list") {
    for (const auto& n : loader->materialized_names()) out << n << "\n";
    return 0;
  }
  if (action != "show") {
    err << "error: unknown types action '" << action << "' (use list or show)\n";
    return 2;
  }
  try {
    TypePtr t = loader->resolve(name);
    out << t->describe();
    if (t->kind() == TypeKind::Composed) {
      try {
        out << write_type(t);
      } catch (const Error&) {
        const ComposedImplementation& impl = *t->composed_impl();
        for (const auto& cs : impl.composing)
          out << "  DEF " << cs.defName << " " << cs.type->name() << "\n";
        for (const auto& r : impl.routes) {
          auto end = [&](int def, int prop) {
            if (def < 0) return t->property(prop).name + ".value";
            const auto& cs = impl.composing[static_cast<size_t>(def)];
            return cs.defName + "." + cs.type->property(prop).name;
          };
          out << "  route " << end(r.srcDef, r.srcProp) << " -> " << end(r.dstDef, r.dstProp)
              << "\n";
        }
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

/// One interactive composition session: a Space, a current prototype and the
/// last frozen type. Verb errors print and the session continues.
class ShellSession {
 public:
  ShellSession(std::shared_ptr<TypeLoader> loader, std::ostream& out, std::ostream& err)
      : loader_(std::move(loader)), out_(out), err_(err) {}

  /// Returns false when the session should end.
  bool handle(const std::string& rawLine) {
    std::string line = cli_detail::strip_line(rawLine);
    if (line.empty()) return true;
    std::istringstream ls(line);
    std::string verb;
    ls >> verb;
    if (verb == "quit") return false;
    try {
      dispatch(verb, ls);
    } catch (const ValidationError& e) {
      for (const Fault& f : e.report()) err_ << "fault: " << to_string(f) << "\n";
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
    }
    return true;
  }

 private:
  void dispatch(const std::string& verb, std::istringstream& ls) {
    if (verb == "proto") {
      std::string name;
      ls >> name;
      if (name.empty()) throw Error(Errc::SyntaxError, "usage: proto NAME");
      proto_ = std::make_unique<Prototype>(space_, loader_, name);
      return;
    }
    if (verb == "pump") {
      space_.pump();
      return;
    }
    if (verb == "freeze") {
      TypePtr t = create_from_prototype(need_proto());
      lastFrozen_ = t;
      out_ << "frozen " << t->name() << "\n";
      return;
    }
    if (verb == "save") {
      std::string file;
      ls >> file;
      if (!lastFrozen_) throw Error(Errc::UnknownName, "nothing frozen yet");
      std::ofstream f(file);
      if (!f) throw Error(Errc::UnknownName, "cannot write " + file);
      f << write_type(lastFrozen_);
      return;
    }
    if (verb == "iface") {
      shell_iface(rest_of(ls));
      return;
    }
    if (verb == "add") {
      std::string def, typeName;
      ls >> def >> typeName;
      if (def.empty() || typeName.empty()) throw Error(Errc::SyntaxError, "usage: add DEF TYPE");
      need_proto().add_component(def, typeName);
      return;
    }
    if (verb == "set") {
      std::string path;
      ls >> path;
      Value v = parse_literal_text(rest_of(ls));
      shell_set(path, v);
      return;
    }
    if (verb == "share") {
      std::string target, source;
      ls >> target >> source;
      shell_share(target, source);
      return;
    }
    if (verb == "route") {
      std::string a, arrow, b;
      ls >> a >> arrow >> b;
      if (arrow != "->") throw Error(Errc::SyntaxError, "usage: route A.P -> B.Q");
      auto [srcName, srcProp] = cli_detail::split_path(a);
      auto [dstName, dstProp] = cli_detail::split_path(b);
      need_proto().add_route(srcName, srcProp.empty() ? "value" : srcProp, dstName,
                             dstProp.empty() ? "value" : dstProp);
      return;
    }
    if (verb == "deny") {
      std::string target, flags;
      ls >> target >> flags;
      shell_deny(target, flags);
      return;
    }
    if (verb == "get") {
      std::string path;
      ls >> path;
      auto [name, prop] = cli_detail::split_path(path);
      out_ << path << " = " << to_literal(need_proto().get(name, prop)) << "\n";
      return;
    }
    throw Error(Errc::SyntaxError, "unknown verb '" + verb + "'");
  }

  Prototype& need_proto() {
    if (!proto_) throw Error(Errc::UnknownName, "no prototype; start one with: proto NAME");
    return *proto_;
  }

  static std::string rest_of(std::istringstream& ls) {
    std::string rest;
    std::getline(ls, rest);
    return rest;
  }

  /// iface [FLAGS] TYPE NAME [= LIT]
  void shell_iface(const std::string& rest) {
    textio::Lexer lex(rest);
    auto expect = [&](const char* p) {
      textio::Token t = lex.next();
      if (t.kind != textio::Token::Punct || t.text != p)
        throw Error(Errc::SyntaxError, std::string("expected '") + p + "' in iface");
    };
    expect("[");
    std::string flags;
    while (!(lex.peek().kind == textio::Token::Punct && lex.peek().text == "]")) {
      textio::Token t = lex.next();
      if (t.kind != textio::Token::Ident) throw Error(Errc::SyntaxError, "bad access flags");
      if (!flags.empty()) flags += " ";
      flags += t.text;
    }
    lex.next();
    std::string typeName;
    textio::Token t = lex.next();
    if (t.kind != textio::Token::Ident) throw Error(Errc::SyntaxError, "expected a type name");
    typeName = t.text;
    while (lex.peek().kind == textio::Token::Punct && lex.peek().text == ".") {
      lex.next();
      typeName += "." + lex.next().text;
    }
    if (lex.peek().kind == textio::Token::Punct && lex.peek().text == "[") {
      lex.next();
      expect("]");
      typeName += "[]";
    }
    textio::Token nameTok = lex.next();
    if (nameTok.kind != textio::Token::Ident)
      throw Error(Errc::SyntaxError, "expected a property name");
    std::optional<Value> def;
    if (lex.peek().kind == textio::Token::Punct && lex.peek().text == "=") {
      lex.next();
      def = shell_literal(lex);
    }
    need_proto().add_interface_property(nameTok.text, typeName, parse_access(flags), def);
  }

  Value shell_literal(textio::Lexer& lex) {
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
            xs.push_back(shell_literal(lex));
          lex.next();
          return Value(std::move(xs));
        }
        break;
      default:
        break;
    }
    throw Error(Errc::SyntaxError, "expected a literal");
  }

  void shell_set(const std::string& path, const Value& v) {
    Prototype& p = need_proto();
    auto [name, prop] = cli_detail::split_path(path);
    if (PropertyPrototypePtr ip = p.find_interface(name)) {
      if (!prop.empty() && prop != "value")
        throw Error(Errc::UnknownProperty, name + " has no property " + prop);
      p.set_field(ip, v);
      return;
    }
    ComposingInstance* c = p.find_composing(name);
    if (!c) throw Error(Errc::UnknownName, "unknown name " + name);
    if (prop.empty()) throw Error(Errc::UnknownProperty, "set needs DEF.PROP");
    p.set_field(*c, prop, v);
  }

  /// share DEF.PROP NAME  (NAME: interface property, or DEF.PROP of another
  /// composing instance)
  void shell_share(const std::string& target, const std::string& source) {
    Prototype& p = need_proto();
    auto [defName, prop] = cli_detail::split_path(target);
    ComposingInstance* c = p.find_composing(defName);
    if (!c || prop.empty())
      throw Error(Errc::UnknownName, "share target must be DEF.PROP, got " + target);
    PropertyPrototypePtr src;
    auto [srcName, srcProp] = cli_detail::split_path(source);
    if (srcProp.empty()) {
      src = p.find_interface(srcName);
    } else if (ComposingInstance* sc = p.find_composing(srcName)) {
      src = sc->slot(srcProp);
    }
    if (!src) throw Error(Errc::UnknownName, "unknown share source " + source);
    p.share_property(*c, prop, src);
  }

  void shell_deny(const std::string& target, const std::string& flagText) {
    Prototype& p = need_proto();
    std::string flags = flagText;
    if (!flags.empty() && flags.front() == '[') flags = flags.substr(1);
    if (!flags.empty() && flags.back() == ']') flags.pop_back();
    AccessSet denied = parse_access(flags);
    auto [name, prop] = cli_detail::split_path(target);
    if (prop.empty() || prop == "value") {
      if (PropertyPrototypePtr ip = p.find_interface(name)) {
        p.restrict_access(ip, denied);
        return;
      }
    }
    ComposingInstance* c = p.find_composing(name);
    if (!c || prop.empty())
      throw Error(Errc::UnknownName, "deny target must be an interface property or DEF.PROP");
    p.restrict_access(*c, prop, denied);
  }

  std::shared_ptr<TypeLoader> loader_;
  std::ostream& out_;
  std::ostream& err_;
  Space space_;
  std::unique_ptr<Prototype> proto_;
  TypePtr lastFrozen_;
};

/// `compovm shell`: line-oriented composition REPL.
inline int cmd_shell(std::istream& in, std::ostream& out, std::ostream& err,
                     const std::vector<std::string>& typePath, bool interactive) {
  auto loader = make_cli_loader(typePath);
  ShellSession session(loader, out, err);
  std::string line;
  while (true) {
    if (interactive) out << "> " << std::flush;
    if (!std::getline(in, line)) break;
    if (!session.handle(line)) break;
  }
  return 0;
}

}  // namespace compovm
