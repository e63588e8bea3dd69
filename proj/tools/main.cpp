#include "smcnn/commands.hpp"

int main(int argc, char** argv) { return smcnn::run_cli(argc, argv); }
