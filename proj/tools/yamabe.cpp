#include "yamabe/cli.hpp"

int main(int argc, char** argv) { return yamabe::cli::run(argc, argv); }
