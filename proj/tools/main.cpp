#include "regmdp/cli.hpp"

int main(int argc, char** argv) { return regmdp::cli::run(argc, argv); }
