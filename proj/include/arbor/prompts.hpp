#pragma once

#include <map>
#include <string>
#include <vector>

namespace arbor::agents {

// Prompt templates are external text files with named {placeholders}. The
// shipped defaults are embedded at build time; a directory can override any
// of them at startup.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  static PromptLibrary from_dir(const std::string& dir);  // builtin + overrides

  const std::string& text(const std::string& name) const;
  bool has(const std::string& name) const;

  // Substitutes {name} from vars. Unknown placeholders in the template are an
  // error; substituted values are inserted verbatim (never re-scanned).
  static std::string render(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars);

  // Checks that every template required by the agent suite exists and carries
  // the placeholders its role needs. Throws Error{config}.
  void validate() const;

  static const std::vector<std::string>& required_template_names();

 private:
  std::map<std::string, std::string> texts_;
};

}  // namespace arbor::agents
