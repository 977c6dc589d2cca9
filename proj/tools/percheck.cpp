#include <iostream>

#include "percheck/cli.h"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return percheck::cli::run(args, std::cout, std::cerr);
}
