"""Generates data/synthetic35.json: a 35-bus ring-with-chords test grid.

Ratings are log-uniform; machine parameters scale roughly with rating but carry
per-bus noise so the grid is NOT exactly proportional.
"""
import json
import math
import random

N_BUS = 35
N_CHORDS = 12
SEED = 20190415


def main():
    rng = random.Random(SEED)
    buses = []
    for i in range(N_BUS):
        rating = math.exp(rng.uniform(math.log(0.25), math.log(4.0)))
        buses.append({
            "id": i,
            "m": round(4.0 * rating, 6),
            "d": round(1.0 * rating * math.exp(rng.uniform(-0.5, 0.5)), 6),
            "r_inv": round(20.0 * rating * math.exp(rng.uniform(-0.5, 0.5)), 6),
            "tau": round(rng.uniform(3.0, 7.0), 6),
        })
    pairs = set()
    lines = []

    def add(a, b):
        key = (min(a, b), max(a, b))
        if a == b or key in pairs:
            return False
        pairs.add(key)
        lines.append({"from": key[0], "to": key[1],
                      "weight": round(math.exp(rng.uniform(math.log(20.0), math.log(120.0))), 6)})
        return True

    for i in range(N_BUS):
        add(i, (i + 1) % N_BUS)
    chords = 0
    while chords < N_CHORDS:
        if add(rng.randrange(N_BUS), rng.randrange(N_BUS)):
            chords += 1
    grid = {
        "schema": "gridsync-grid/1",
        "name": "synthetic35",
        "per_unit_base": "system p.u.; ratings log-uniform in [0.25, 4]",
        "buses": buses,
        "lines": lines,
    }
    with open("synthetic35.json", "w") as fh:
        json.dump(grid, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
