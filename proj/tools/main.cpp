#include "botaclip_cli/commands.hpp"

int main(int argc, char** argv) { return botaclip::cli::run(argc, argv); }
