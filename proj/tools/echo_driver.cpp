// Reference-model simulator speaking the driver line protocol on stdin/stdout.
// Usage: simcamp_echo_driver [seed]

#include <iostream>

#include "simcamp/driver.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  std::uint64_t seed = 0;
  try {
    if (argc > 1) seed = simcamp::detail::parse_int<std::uint64_t>(argv[1], "seed");
    simcamp::serve_reference_driver(std::cin, std::cout, seed);
  } catch (const std::exception& e) {
    std::cerr << "simcamp_echo_driver: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
