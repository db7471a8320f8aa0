#include "webuq/cli.hpp"

int main(int argc, char** argv) {
    return webuq::cli::run_cli(argc, argv);
}
