#include <iostream>

#include "crashlens/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return crashlens::run_cli(args, std::cout, std::cerr);
}
