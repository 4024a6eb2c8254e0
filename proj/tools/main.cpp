#include "cli.hpp"

int main(int argc, char** argv)
{
    return mcdbf::cli::cli_main(argc, argv);
}
