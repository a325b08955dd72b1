#include "articulate/cli.hpp"

int main(int argc, char** argv) { return articulate::cli::dispatch(argc, argv); }
