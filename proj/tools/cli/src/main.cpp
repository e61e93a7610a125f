#include "ccseg/cli/cli.hpp"

int main(int argc, char** argv) {
  return ccseg::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
