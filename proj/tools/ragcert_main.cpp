#include "ragcert/cli.hpp"

int main(int argc, char** argv) { return ragcert::run_cli(argc, argv); }
