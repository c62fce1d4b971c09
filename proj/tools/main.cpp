#include "poirec/cli.hpp"

int main(int argc, char** argv) { return poirec::cli_main(argc, argv); }
