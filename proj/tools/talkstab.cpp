#include "talkstab/cli.hpp"

int main(int argc, char** argv) { return talkstab::cli::run(argc, argv); }
