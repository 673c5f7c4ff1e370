#include "parab/cli.hpp"

int main(int argc, char** argv) { return parab::cli::run(argc, argv); }
