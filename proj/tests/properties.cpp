#include "property_checks.hpp"

#include <cstdio>

int main() {
  bool ok = true;
  for (const auto &c : props::run_all()) {
    std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}
