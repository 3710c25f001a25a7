#include "zerohopf/cli.hpp"

int main(int argc, char** argv) { return zerohopf::cli::run_main(argc, argv); }
