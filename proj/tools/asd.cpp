#include "asd/cli.hpp"

int main(int argc, char** argv) { return asd::run_cli(argc, argv); }
