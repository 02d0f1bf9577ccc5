#include "metapuck/cli.hpp"

int main(int argc, char** argv) { return metapuck::cli_main(argc, argv); }
