// CLI entry point. Subcommands land here as the library modules come online.

#include <cstdio>

int main() {
    std::puts("fbh: not wired up yet");
    return 2;
}
