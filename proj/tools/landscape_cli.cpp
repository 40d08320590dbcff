#include "landscape/cli.hpp"

int main(int argc, char** argv) { return landscape::cli::run(argc, argv); }
