#include "cli_app.hpp"

int main(int argc, char** argv) { return rsdetect::cli::main_entry(argc, argv); }
