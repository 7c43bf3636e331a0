#include "tusla/harness.hpp"

int main(int argc, char** argv) { return tusla::harness::run_cli(argc, argv); }
