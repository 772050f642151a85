// Hand-labeled execution fixtures: small candidate programs with per-test
// expected outcomes. Used by the exec unit tests and by the acceptance
// suite's oracle-agreement criterion.
#pragma once

#include <string>
#include <vector>

#include "arbor/types.hpp"

namespace arbor::test {

struct ExecCase {
  std::string input;
  std::string expected;
  TestOutcome want;
};

struct ExecFixture {
  std::string name;
  JudgingStyle style;
  std::string entry;  // empty for stdio
  std::string code;
  std::vector<ExecCase> cases;
  std::int64_t timeout_ms = 5000;
};

inline const std::vector<ExecFixture>& exec_corpus() {
  using O = TestOutcome;
  static const std::vector<ExecFixture> corpus = {
      {"identity_int", JudgingStyle::call_based, "f",
       "def f(x):\n    return x",
       {{"[5]", "5", O::pass}}},
      {"add_pair", JudgingStyle::call_based, "f",
       "def f(a, b):\n    return a + b",
       {{"[2, 3]", "5", O::pass}}},
      {"sub_instead_of_add", JudgingStyle::call_based, "f",
       "def f(a, b):\n    return a - b",
       {{"[2, 3]", "5", O::wrong_output}}},
      {"raises_value_error", JudgingStyle::call_based, "f",
       "def f(x):\n    raise ValueError('nope')",
       {{"[1]", "1", O::runtime_error}}},
      {"busy_loop", JudgingStyle::call_based, "f",
       "def f(x):\n    while True:\n        pass",
       {{"[1]", "1", O::timeout}},
       150},
      {"string_result", JudgingStyle::call_based, "f",
       "def f(x):\n    return 'abc'",
       {{"[0]", "\"abc\"", O::pass}}},
      {"list_result", JudgingStyle::call_based, "f",
       "def f():\n    return [1, 2]",
       {{"[]", "[1,2]", O::pass}}},
      {"bool_result", JudgingStyle::call_based, "f",
       "def f():\n    return True",
       {{"[]", "true", O::pass}}},
      {"none_result", JudgingStyle::call_based, "f",
       "def f():\n    return None",
       {{"[]", "null", O::pass}}},
      {"float_result", JudgingStyle::call_based, "f",
       "def f():\n    return 0.5",
       {{"[]", "0.5", O::pass}}},
      {"constant_true_partial", JudgingStyle::call_based, "f",
       "def f(x):\n    return True",
       {{"[2]", "true", O::pass}, {"[3]", "false", O::wrong_output}}},
      {"syntax_error", JudgingStyle::call_based, "f",
       "def f(x:\n    return x",
       {{"[1]", "1", O::runtime_error}}},
      {"missing_entry_point", JudgingStyle::call_based, "f",
       "def g(x):\n    return x",
       {{"[1]", "1", O::runtime_error}}},
      {"sanitized_environment", JudgingStyle::call_based, "f",
       "import os\ndef f():\n    return os.environ.get('ARBOR_SECRET_TOKEN', '')",
       {{"[]", "\"\"", O::pass}}},
      {"stderr_noise_still_passes", JudgingStyle::call_based, "f",
       "import sys\ndef f(x):\n    print('warn: slow path', file=sys.stderr)\n"
       "    return x",
       {{"[9]", "9", O::pass}}},
      {"tuple_renders_as_list", JudgingStyle::call_based, "f",
       "def f():\n    return (1, 2)",
       {{"[]", "[1,2]", O::pass}}},
      {"dict_keys_sorted", JudgingStyle::call_based, "f",
       "def f():\n    return {'b': 1, 'a': 2}",
       {{"[]", "{\"a\":2,\"b\":1}", O::pass}}},
      {"stdio_echo", JudgingStyle::stdio_based, "",
       "import sys\nsys.stdout.write(sys.stdin.read())",
       {{"hi\n", "hi", O::pass}}},
      {"stdio_sum_two", JudgingStyle::stdio_based, "",
       "vals = input().split()\nprint(int(vals[0]) + int(vals[1]))",
       {{"2 3\n", "5", O::pass}}},
      {"stdio_trailing_whitespace_ok", JudgingStyle::stdio_based, "",
       "print('5  ')\nprint()",
       {{"", "5", O::pass}}},
      {"stdio_wrong_answer", JudgingStyle::stdio_based, "",
       "print(42)",
       {{"", "41", O::wrong_output}}},
      {"stdio_nonzero_exit", JudgingStyle::stdio_based, "",
       "import sys\nsys.exit(3)",
       {{"", "x", O::runtime_error}}},
      {"stdio_sleeper", JudgingStyle::stdio_based, "",
       "import time\ntime.sleep(30)\nprint('late')",
       {{"", "late", O::timeout}},
       150},
      {"stdio_writes_scratch_file", JudgingStyle::stdio_based, "",
       "open('junk.txt', 'w').write('x')\nprint('ok')",
       {{"", "ok", O::pass}}},
      {"stdio_unicode", JudgingStyle::stdio_based, "",
       "print('h\\u00e9llo')",
       {{"", "h\xc3\xa9llo", O::pass}}},
      {"stdio_flooding_output", JudgingStyle::stdio_based, "",
       "print('a' * 2000000)",
       {{"", "a", O::wrong_output}}},
  };
  return corpus;
}

inline Problem fixture_problem(const ExecFixture& fixture) {
  Problem p;
  p.id = "fixture-" + fixture.name;
  p.description = "fixture";
  p.judging_style = fixture.style;
  if (!fixture.entry.empty()) p.entry_point = fixture.entry;
  p.solution_language = "python";
  p.source_tag = "fixture";
  for (const ExecCase& c : fixture.cases)
    p.visible_tests.push_back({c.input, c.expected});
  p.hidden_tests.push_back({"[0]", "0"});  // placate validation; unused
  return p;
}

}  // namespace arbor::test
