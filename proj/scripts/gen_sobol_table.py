#!/usr/bin/env python3
"""Emit include/riskopt/qmc/sobol_table.hpp from the Joe-Kuo direction numbers shipped with scipy."""
import os
import sys

import numpy as np
import scipy

MAX_DIM = 1111

path = os.path.join(os.path.dirname(scipy.__file__), "stats", "_sobol_direction_numbers.npz")
data = np.load(path)
poly = data["poly"][:MAX_DIM]
vinit = data["vinit"][:MAX_DIM]

out = sys.stdout
out.write("#pragma once\n\n")
out.write("// Generated by scripts/gen_sobol_table.py from the Joe-Kuo (new-joe-kuo-6.21201)\n")
out.write("// direction numbers. Do not edit by hand.\n\n")
out.write("#include <array>\n#include <cstdint>\n\n")
out.write("namespace riskopt::qmc::detail {\n\n")
out.write(f"inline constexpr int kSobolMaxDim = {MAX_DIM};\n")
out.write(f"inline constexpr int kSobolInitCount = {vinit.shape[1]};\n\n")
out.write("// Primitive polynomial of each dimension, leading and trailing bits included.\n")
out.write(f"inline constexpr std::array<std::uint32_t, {MAX_DIM}> kSobolPoly = {{\n")
for i in range(0, MAX_DIM, 12):
    out.write("    " + ", ".join(str(int(p)) for p in poly[i:i + 12]) + ",\n")
out.write("};\n\n")
out.write("// Initial direction integers m_1..m_s, zero padded.\n")
out.write(f"inline constexpr std::array<std::array<std::uint32_t, {vinit.shape[1]}>, {MAX_DIM}> kSobolInit = {{{{\n")
for row in vinit:
    out.write("    {" + ", ".join(str(int(v)) for v in row) + "},\n")
out.write("}};\n\n")
out.write("}  // namespace riskopt::qmc::detail\n")
