#include "lipm/cli.hpp"

int main(int argc, char** argv) { return lipm::cli::run(argc, argv); }
