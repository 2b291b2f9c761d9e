#include <cstdio>
int main() { std::puts("kst placeholder"); return 0; }
