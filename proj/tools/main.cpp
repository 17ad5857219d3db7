#include "mcgc/cli.hpp"

int main(int argc, char** argv) { return mcgc::cli::run(argc, argv); }
