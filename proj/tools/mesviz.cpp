#include "mesviz/cli.hpp"

int main(int argc, char** argv) { return mesviz::cli::run(argc, argv); }
