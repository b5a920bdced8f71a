#include <cstdio>
#include <string_view>

#include <fmt/core.h>

#include "metarg/validation.hpp"

// One line per acceptance criterion; exit status 1 if any fails.
int main(int argc, char** argv) {
  using namespace metarg;
  const std::string_view only = argc > 1 ? argv[1] : "";
  int failed = 0, run = 0;
  for (const auto& check : run_validation_suite()) {
    if (!only.empty() && check.name != only) continue;
    ++run;
    failed += check.passed ? 0 : 1;
    fmt::print("{}\n", format_check(check));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", run - failed, run);
  return failed == 0 && run > 0 ? 0 : 1;
}
