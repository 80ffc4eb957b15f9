#include "cpekit/cli.hpp"

int main(int argc, char** argv) { return cpekit::cli::run(argc, argv); }
