#include "bc/cli.hpp"

int main(int argc, char** argv) { return bc::cli::run(argc, argv); }
