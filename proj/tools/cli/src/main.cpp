#include <iostream>

#include "sflow/cli/app.hpp"

int main(int argc, char** argv) {
  return sflow::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
