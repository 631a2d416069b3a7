#include "ssltune/cli.hpp"

int main(int argc, char** argv) { return ssltune::cli::run(argc, argv); }
