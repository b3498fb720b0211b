#include "segnoise/cli.hpp"

int main(int argc, char** argv) { return segnoise::cli::dispatch(argc, argv); }
