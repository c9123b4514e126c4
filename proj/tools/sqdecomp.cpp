#include "sqdecomp/cli.hpp"

int main(int argc, char** argv) { return sqdecomp::cli::run(argc, argv); }
