#include "chseg/cli.hpp"

int main(int argc, char** argv) { return chseg::cli::run(argc, argv); }
