#include <iostream>
#include <string>
#include <vector>

#include "gridsync/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return gridsync::run_cli(args, std::cout, std::cerr);
}
