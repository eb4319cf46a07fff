#include <iostream>
#include <vector>

#include "ppc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ppc::run_cli(args, std::cout, std::cerr);
}
