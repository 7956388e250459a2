#include <iostream>
#include <string>
#include <vector>

#include "nextpp/cli.hpp"

int main(int argc, char** argv) {
    return nextpp::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
