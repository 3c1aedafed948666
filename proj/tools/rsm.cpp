#include "commands.hpp"

int main(int argc, char** argv) { return rsm::cli::run(argc, argv); }
