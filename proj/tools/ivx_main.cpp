#include "ivx/harness.hpp"

int main(int argc, char** argv) { return ivx::cli_main(argc, argv); }
