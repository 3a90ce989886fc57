#include "dabls/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return dabls::dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
