#include "xdiff/harness/cli.hpp"

int main(int argc, char** argv) { return xdiff::harness::run_cli(argc, argv); }
