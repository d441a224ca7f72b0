/*
 * End-to-end demo (placeholder while modules land)
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 */

#include <cstdio>

int main()
{
    std::puts("demo: not wired yet");
    return 0;
}
