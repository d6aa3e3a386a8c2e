#include "chiral_switch/io/cli.hpp"

int main(int argc, char** argv) { return chiral::io::run_cli(argc, argv); }
