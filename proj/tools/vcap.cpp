#include "vcap/cli/cli.hpp"

int main(int argc, char** argv) { return vcap::cli::run(argc, argv); }
