#include "vstream/cli.h"

int main(int argc, char** argv) { return vstream::run(argc, argv); }
