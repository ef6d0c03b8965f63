#include "cli.hpp"

int main(int argc, char** argv) { return rtge::cli::run(argc, argv); }
