#include "tokenlens_cli/cli.hpp"

int main(int argc, char** argv) { return tokenlens::cli::run_cli(argc, argv); }
