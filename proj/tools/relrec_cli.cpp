#include "relrec/cli.hpp"

int main(int argc, char** argv) { return relrec::cli_main(argc, argv); }
