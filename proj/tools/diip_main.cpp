#include "diip/cli.hpp"

int main(int argc, char** argv) {
  return diip::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
