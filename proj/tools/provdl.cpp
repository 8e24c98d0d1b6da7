#include "provdl/cli.hpp"

int main(int argc, char** argv) { return provdl::run(argc, argv); }
