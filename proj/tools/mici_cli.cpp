#include "mici/cli.hpp"

int main(int argc, char** argv) { return mici::run_cli(argc, argv); }
