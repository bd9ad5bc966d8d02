#include <unistd.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "compovm/compovm.hpp"

namespace {

// --type-path flags first, then COMPOVM_TYPE_PATH entries (':'-separated).
std::vector<std::string> full_type_path(std::vector<std::string> flags) {
  if (const char* env = std::getenv("COMPOVM_TYPE_PATH")) {
    std::string s(env);
    size_t start = 0;
    while (start <= s.size()) {
      size_t colon = s.find(':', start);
      std::string part = s.substr(start, colon == std::string::npos ? colon : colon - start);
      if (!part.empty()) flags.push_back(part);
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
  }
  return flags;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"component composition runtime"};
  app.require_subcommand(1);

  std::vector<std::string> typePath;
  std::vector<std::string> files;
  std::string script;
  std::string action;
  std::string typeName;

  CLI::App* run = app.add_subcommand("run", "instantiate a scene and drive it with a script");
  run->add_option("files", files, "component files, exactly one with a scene block")
      ->required();
  run->add_option("--script", script, "stimulus script file");
  run->add_option("--type-path", typePath, "directory to resolve type files from")
      ->take_all();

  CLI::App* types = app.add_subcommand("types", "list or show registered types");
  types->add_option("action", action, "list | show")->required();
  types->add_option("name", typeName, "type name for show");
  types->add_option("--type-path", typePath, "directory to resolve type files from")
      ->take_all();

  CLI::App* shell = app.add_subcommand("shell", "interactive composition shell");
  shell->add_option("--type-path", typePath, "directory to resolve type files from")
      ->take_all();

  CLI11_PARSE(app, argc, argv);

  std::vector<std::string> dirs = full_type_path(typePath);
  if (run->parsed())
    return compovm::cmd_run(files, script, dirs, std::cout, std::cerr);
  if (types->parsed())
    return compovm::cmd_types(action, typeName, dirs, std::cout, std::cerr);
  bool interactive = isatty(fileno(stdin)) != 0;
  return compovm::cmd_shell(std::cin, std::cout, std::cerr, dirs, interactive);
}
