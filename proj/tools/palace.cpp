#include "palace/service/cli.hpp"

int main(int argc, char** argv) { return palace::service::cli_dispatch(argc, argv); }
