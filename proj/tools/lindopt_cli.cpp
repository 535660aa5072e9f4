#include "lindopt/cli.hpp"

int main(int argc, char** argv) { return lindopt::cli::run(argc, argv); }
