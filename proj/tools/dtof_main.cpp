#include "dtof_cli.hpp"

int main(int argc, char** argv) { return dtof::cli::run(argc, argv); }
