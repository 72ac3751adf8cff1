#include "sdeheat/cli.hpp"

int main(int argc, char** argv) {
    return sdeheat::run(argc, argv).exit_code;
}
