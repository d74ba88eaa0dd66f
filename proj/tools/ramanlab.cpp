#include "ramanlab/cli.hpp"

int main(int argc, char **argv) { return ramanlab::cli::run(argc, argv); }
