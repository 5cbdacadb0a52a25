#!/usr/bin/env python3
# Market model: throughput t and price p -> benefit.
import sys

for line in sys.stdin:
    t, p = (float(v) for v in line.split())
    benefit = p * t * (1.0 - t / 200.0)
    print(repr(benefit), flush=True)
