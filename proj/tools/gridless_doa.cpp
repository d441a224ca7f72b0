/*
 * gridless-doa command-line tool (placeholder while modules land)
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 */

#include <cstdio>

int main()
{
    std::puts("gridless-doa: not wired yet");
    return 1;
}
