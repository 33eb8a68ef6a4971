#include "radsynth/pipeline/cli.hpp"

int main(int argc, char** argv) { return radsynth::pipeline::cli_main(argc, argv); }
