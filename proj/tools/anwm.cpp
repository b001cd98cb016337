#include "anwm/cli.hpp"

int main(int argc, char** argv) { return anwm::dispatch(argc, argv); }
