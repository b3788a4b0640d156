#include "mcal/cli.hpp"

int main(int argc, char** argv) { return mcal::cli_run(argc, argv); }
