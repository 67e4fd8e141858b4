#include <string>
#include <vector>

#include "tokenring/cli.hpp"

int main(int argc, char* argv[]) {
    std::vector<std::string> args(argv, argv + argc);
    return tokenring::run_cli(args);
}
