#include <iostream>

#include "dalm/cli.hpp"

int main(int argc, char** argv) {
    return dalm::run_cli(argc, argv, std::cout, std::cerr);
}
