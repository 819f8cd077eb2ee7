#include "kho/cli.hpp"

int main(int argc, char** argv) { return kho::cli_main(argc, argv); }
