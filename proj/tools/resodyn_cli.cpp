// resodyn_cli.cpp — command-line entry point

#include "resodyn/harness.hpp"

int main(int argc, char** argv) { return resodyn::harness::cli_run(argc, argv); }
