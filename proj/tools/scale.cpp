#include "levyscale/commands.hpp"

int main(int argc, char** argv) { return levyscale::run_cli(argc, argv); }
