#!/usr/bin/env python3
"""Generate the static Unicode block table from a UCD Blocks.txt file.

Usage: gen_unicode_blocks.py /path/to/Blocks.txt > core/src/unicode_blocks_table.inc
"""
import re
import sys


def main(path):
    version = None
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            m = re.match(r"#\s*Blocks-(\d+\.\d+\.\d+)\.txt", line)
            if m:
                version = m.group(1)
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            rng, name = (s.strip() for s in line.split(";"))
            lo, hi = rng.split("..")
            rows.append((int(lo, 16), int(hi, 16), name))
    if version is None:
        sys.exit("could not find version line in " + path)
    rows.sort()
    print("// Generated by scripts/gen_unicode_blocks.py from Blocks-%s.txt. Do not edit." % version)
    print('constexpr std::string_view kBlockTableVersion = "%s";' % version)
    print("constexpr BlockRange kBlockTable[] = {")
    for lo, hi, name in rows:
        print('    {0x%04X, 0x%04X, "%s"},' % (lo, hi, name))
    print("};")


if __name__ == "__main__":
    main(sys.argv[1])
