#include "cli.hpp"

int main(int argc, char** argv) { return fcausal::cli::dispatch(argc, argv); }
