#include "normest/cli.hpp"

int main(int argc, char** argv) {
  return normest::run_cli(argc, argv);
}
