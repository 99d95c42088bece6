#include <iostream>

#include "subot_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return subot::cli::run(args, std::cout, std::cerr);
}
