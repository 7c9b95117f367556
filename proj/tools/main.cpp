#include "ivbandit/cli.hpp"

int main(int argc, char** argv) { return ivb::run_cli(argc, argv); }
