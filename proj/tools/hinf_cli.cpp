#include <iostream>

#include "hinf/cli.hpp"

int main(int argc, char** argv) {
    return hinf::cli_main(argc, argv, std::cout, std::cerr);
}
