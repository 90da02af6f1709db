#include "appcheck/runner.hpp"

int main(int argc, char** argv) { return appcheck::runner::cli(argc, argv); }
