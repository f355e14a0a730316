#include "frackin/cli/app.hpp"

int main(int argc, char** argv) { return frackin::cli::run_main(argc, argv); }
