#include "slicescout/cli.hpp"

int main(int argc, char** argv) { return slicescout::run_cli(argc, argv); }
