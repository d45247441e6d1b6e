#include "pcib/cli.hpp"

int main(int argc, char** argv) { return pcib::app::run_cli(argc, argv); }
