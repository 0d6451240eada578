#include <iostream>

#include "reflectcast/cli/cli.hpp"

int main(int argc, char** argv) {
    reflectcast::cli::configure_logging();
    return reflectcast::cli::run(argc, argv, std::cout, std::cerr);
}
