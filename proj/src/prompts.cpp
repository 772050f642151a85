#include "arbor/prompts.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <arbor/prompts_embedded.hpp>

#include "arbor/error.hpp"

namespace arbor::agents {

namespace {

// template name -> placeholders it must contain
const std::map<std::string, std::vector<std::string>>& required_placeholders() {
  static const std::map<std::string, std::vector<std::string>> req = {
      {"thinker.system", {}},
      {"thinker.strategies.user", {"description", "visible_tests", "max_strategies"}},
      {"thinker.more.user", {"description", "prior_strategies", "next_ordinal"}},
      {"thinker.reflections.user",
       {"description", "strategy", "code", "exec_feedback", "suggestion",
        "prior_reflections", "max_reflections"}},
      {"solver.system", {"language"}},
      {"solver.generate.user", {"description", "visible_tests", "strategy", "language"}},
      {"solver.direct.user", {"description", "visible_tests", "language"}},
      {"solver.cot.user", {"description", "visible_tests", "language"}},
      {"debugger.system", {"language"}},
      {"debugger.refine.user",
       {"description", "strategy", "code", "exec_feedback", "reflection", "language"}},
      {"critic.system", {}},
      {"critic.evaluate.user", {"description", "strategy", "code", "exec_feedback"}},
      {"critic.verify.user", {"description", "code", "exec_feedback"}},
  };
  return req;
}

}  // namespace

const std::vector<std::string>& PromptLibrary::required_template_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : required_placeholders()) out.push_back(name);
    return out;
  }();
  return names;
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.texts_ = embedded::prompt_texts();
  lib.validate();
  return lib;
}

PromptLibrary PromptLibrary::from_dir(const std::string& dir) {
  PromptLibrary lib = builtin();
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw Error(ErrorKind::config, "prompt directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::ostringstream content;
    content << in.rdbuf();
    lib.texts_[entry.path().stem().string()] = content.str();
  }
  lib.validate();
  return lib;
}

bool PromptLibrary::has(const std::string& name) const { return texts_.count(name) > 0; }

const std::string& PromptLibrary::text(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end())
    throw Error(ErrorKind::config, "unknown prompt template: " + name);
  return it->second;
}

std::string PromptLibrary::render(const std::string& tmpl,
                                  const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c != '{') {
      out += c;
      ++i;
      continue;
    }
    std::size_t close = tmpl.find('}', i + 1);
    if (close == std::string::npos)
      throw Error(ErrorKind::config, "unterminated placeholder in template");
    std::string name = tmpl.substr(i + 1, close - i - 1);
    auto it = vars.find(name);
    if (it == vars.end())
      throw Error(ErrorKind::config, "template uses unknown placeholder {" + name + "}");
    out += it->second;  // inserted verbatim, never re-scanned
    i = close + 1;
  }
  return out;
}

void PromptLibrary::validate() const {
  for (const auto& [name, placeholders] : required_placeholders()) {
    auto it = texts_.find(name);
    if (it == texts_.end())
      throw Error(ErrorKind::config, "missing prompt template: " + name);
    for (const std::string& ph : placeholders) {
      if (it->second.find("{" + ph + "}") == std::string::npos)
        throw Error(ErrorKind::config,
                    "template " + name + " lacks required placeholder {" + ph + "}");
    }
  }
}

}  // namespace arbor::agents
