#include "pointscat/cli.hpp"

int main(int argc, char** argv) { return pointscat::cli::run(argc, argv); }
