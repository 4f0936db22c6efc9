#include <iostream>

#include "riga/cli/app.h"

int main(int argc, char** argv) { return riga::cli::run(argc, argv, std::cout, std::cerr); }
