#include "cli_main.hpp"

int main(int argc, char** argv) { return laecf::cli::cli_main(argc, argv); }
