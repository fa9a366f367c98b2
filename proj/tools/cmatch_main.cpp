#include "cm/cli/commands.hpp"

int main(int argc, char** argv) { return cm::cli::run_cli(argc, argv); }
