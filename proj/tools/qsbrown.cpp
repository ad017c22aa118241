#include "qsbrown/cli.hpp"

int main(int argc, char** argv) { return qsb::cli::run(argc, argv); }
