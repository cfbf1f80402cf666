#include "cli.hpp"

int main(int argc, char** argv) { return dotlab::cli::run(argc, argv); }
