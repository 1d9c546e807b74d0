#include "provlab/cli.hpp"

int main(int argc, char** argv) { return provlab::run_cli(argc, argv); }
