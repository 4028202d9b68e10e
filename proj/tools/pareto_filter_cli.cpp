#include <iostream>
#include <string>
#include <vector>

#include "pareto_filter/experiments.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pareto_filter::run_cli(args, std::cout, std::cerr);
}
