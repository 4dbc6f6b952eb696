#include "xitrace/cli.hpp"

int main(int argc, char** argv) { return xitrace::cli::run(argc, argv); }
