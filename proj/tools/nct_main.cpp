#include <cstdio>

#include "nct/version.hpp"

int main() {
  std::printf("nct %s\n", nct::kVersion);
  return 0;
}
