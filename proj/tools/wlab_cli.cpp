#include "wlab/cli.hpp"

int main(int argc, char** argv) { return wlab::run_cli(argc, argv); }
