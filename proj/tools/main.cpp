#include "segtrans/cli.hpp"

int main(int argc, char** argv) { return segtrans::cli_run(argc, argv); }
