#include <iostream>
#include <string>
#include <vector>

#include "bcdp/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bcdp::cli::run(args, std::cout, std::cerr);
}
