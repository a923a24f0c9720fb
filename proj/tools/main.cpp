#include "commands.hpp"

int main(int argc, char** argv)
{
    return interpkit::cli::run(argc, argv);
}
