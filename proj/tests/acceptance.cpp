// Runs the full acceptance suite; exit status 0 iff every criterion passes.

#include "zlab/harness.hpp"

#include <iostream>

int main() { return zlab::run_selftest(std::cout) == 0 ? 0 : 1; }
