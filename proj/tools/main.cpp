#include "wsaug/cli.hpp"

int main(int argc, char** argv) { return wsaug::run_cli(argc, argv); }
