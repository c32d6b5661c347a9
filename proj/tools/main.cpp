#include <string>
#include <vector>

#include "wbcrescue/cli.hpp"

int main(int argc, char** argv) {
  return wbcr::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
