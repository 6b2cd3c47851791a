#include "pipeline.hpp"

int main(int argc, char** argv) { return adlti::pipeline::run(argc, argv); }
