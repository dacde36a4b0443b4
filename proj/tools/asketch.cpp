#include <asketch/cli.hpp>

int main(int argc, char** argv) {
  return asketch::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
