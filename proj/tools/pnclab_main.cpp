#include "pnclab/cli.hpp"

int main(int argc, char** argv) { return pnclab::cli::run(argc, argv); }
