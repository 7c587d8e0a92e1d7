#include "crone/cli.hpp"

int main(int argc, char** argv) { return crone::run_cli(argc, argv); }
