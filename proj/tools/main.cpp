#include "zscan/engine.hpp"

int main(int argc, char** argv) {
  return zscan::engine::cli_main(argc, argv);
}
