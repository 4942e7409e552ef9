#include <iostream>

#include "vpme/acceptance.hpp"

int main() {
  const auto results = vpme::run_acceptance({}, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
