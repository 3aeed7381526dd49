#include <iostream>

#include "ysm/cli.hpp"

int main(int argc, char** argv) {
    return ysm::cli::run(argc, argv, std::cout, std::cerr);
}
