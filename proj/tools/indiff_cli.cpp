#include "indiff/cli.hpp"

int main(int argc, char** argv) { return indiff::run_cli(argc, argv); }
