#include "gfflab/cli.hpp"

int main(int argc, char** argv) { return gfflab::cli::main(argc, argv); }
