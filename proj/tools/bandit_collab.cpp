#include <bandit_collab/cli.hpp>

int main(int argc, char** argv) { return bandit_collab::cli::parse_and_dispatch(argc, argv); }
