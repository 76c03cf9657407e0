#include "copnet/cli.hpp"

int main(int argc, char** argv) { return copnet::cli::run(argc, argv); }
