#include <iostream>

#include "sketchxai/app/cli.hpp"

int main(int argc, char** argv) { return sketchxai::app::run_cli(argc, argv, std::cout, std::cerr); }
