#include "ioth/cli.hpp"

int main(int argc, char** argv) { return ioth::cli::run(argc, argv); }
