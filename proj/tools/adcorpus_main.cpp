#include "adcorpus/cli.hpp"

int main(int argc, char** argv) { return adcorpus::cli::run(argc, argv); }
