#include "vanetsim/scenario/cli.hpp"

int main(int argc, char** argv) { return vanetsim::cli_main(argc, argv); }
