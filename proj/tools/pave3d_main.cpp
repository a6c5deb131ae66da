#include "pave3d/cli/cli.hpp"

int main(int argc, char** argv) { return pave3d::cli::run(argc, argv); }
