#!/usr/bin/env python3
# Plant model: capacity d and efficiency x -> cost, throughput.
import sys

for line in sys.stdin:
    d, x = (float(v) for v in line.split())
    throughput = 8.0 * d * x / (1.0 + 0.1 * d)
    cost = 5.0 + 2.0 * d + 0.15 * d * d
    print(f"{cost!r} {throughput!r}", flush=True)
