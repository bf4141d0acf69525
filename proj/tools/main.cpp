#include "../src/cli_app.hpp"

int main(int argc, char** argv) { return rankdte::cli::run(argc, argv); }
