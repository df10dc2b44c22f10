"""Generate assets/lexicon.txt: word, pos-tag, v1..v64.

Each concept cluster gets its own direction from an orthonormal basis;
members are small rotations of it (at most 7 degrees from the cluster
direction, so synonyms are within 14 degrees of each other).  A few
clusters are blended with a related one at a fixed cosine.
"""
import math
import sys

import numpy as np

M = 64
SEED = 20200301

LOC = [
    ["restaurant", "diner", "eatery"],
    ["information desk", "reception", "help desk", "front desk"],
    ["laboratory", "lab"],
    ["lift", "elevator"],
    ["hall", "auditorium"],
    ["school", "academy"],
    ["cafe", "coffee shop"],
    ["cafeteria", "canteen"],
    ["thrift shop", "secondhand store"],
    ["post office"],
    ["office building", "office"],
    ["playground"],
    ["library"],
    ["kitchen"],
    ["lobby", "foyer"],
    ["rest area", "rest region", "lounge"],
    ["workstation", "work station"],
    ["classroom"],
    ["meeting room", "conference room"],
    ["bathroom", "restroom", "toilet"],
    ["exit"],
    ["entrance", "front door", "door"],
    ["parking lot", "car park"],
    ["bus stop"],
    ["store", "shop"],
    ["pharmacy", "drugstore"],
    ["bank"],
    ["gym"],
    ["garden", "yard", "park"],
    ["hospital", "clinic"],
    ["charging station", "charger"],
    ["printer room"],
    ["home"],
    ["corridor", "hallway"],
    ["room"],
]
OBJ = [
    ["person", "people", "human", "pedestrian", "man", "woman", "crowd", "student", "worker", "adult"],
    ["child", "children", "kid"],
    ["table"],
    ["desk"],
    ["chair", "seat", "stool"],
    ["bench"],
    ["dog", "puppy"],
    ["cat"],
    ["cart", "trolley"],
    ["plant", "flower pot"],
    ["box", "crate", "parcel"],
    ["bicycle", "bike"],
    ["trash can", "bin", "garbage can"],
    ["car", "vehicle"],
    ["stroller", "pram"],
    ["suitcase", "luggage"],
    ["ladder"],
    ["cone"],
]
# (cluster, related cluster, cosine between their directions)
RELATED = [
    ("child", "person", 0.45),
    ("desk", "table", 0.45),
    ("bench", "chair", 0.45),
    ("cat", "dog", 0.4),
    ("cafeteria", "restaurant", 0.45),
    ("cafe", "restaurant", 0.35),
    ("classroom", "school", 0.45),
    ("thrift shop", "store", 0.45),
    ("laboratory", "workstation", 0.3),
]
NOUNS = """water coffee friend package mail lunch bag doctor paper battery snack
space distance way time job destination goal robot day morning weekend minutes
area side front thing things area""".split()
VERBS = """go move walk head take navigate get want bring lead find drive proceed
reach keep stay collide bump watch avoid mind give run steer touch hit buy meet
pick drop see print charge wait grab need know mean say think like love works
closes rain going be is are am was were do make try have listen excuse let's
could would""".split()
ADJS = "safe careful nice busy tired good great close far clear many some sure honest".split()
ADVS = "away please really right now just pretty early ago too straight over there here".split()


def unit(v):
    return v / np.linalg.norm(v)


def main(out):
    rng = np.random.default_rng(SEED)
    clusters = LOC + OBJ
    n = len(clusters)
    if n > M:
        raise SystemExit(f"{n} clusters do not fit in {M} dimensions")
    q, _ = np.linalg.qr(rng.standard_normal((M, M)))
    base = {c[0]: q[:, i] for i, c in enumerate(clusters)}
    for a, b, cos in RELATED:
        base[a] = unit(cos * base[b] + math.sqrt(1 - cos * cos) * base[a])

    rows = []

    def member(direction, first):
        if first:
            return direction
        noise = rng.standard_normal(M)
        noise -= noise.dot(direction) * direction
        angle = math.radians(rng.uniform(2.0, 7.0))
        return math.cos(angle) * direction + math.sin(angle) * unit(noise)

    for tag, group in (("loc", LOC), ("obj", OBJ)):
        for c in group:
            for i, w in enumerate(c):
                rows.append((w, tag, member(base[c[0]], i == 0)))
    seen = {r[0] for r in rows}
    for tag, words in (("noun", NOUNS), ("verb", VERBS), ("adj", ADJS), ("adv", ADVS)):
        for w in words:
            if w in seen:
                continue
            seen.add(w)
            rows.append((w, tag, unit(rng.standard_normal(M))))

    with open(out, "w") as f:
        f.write("# word, pos-tag, v1..v64\n")
        f.write("# tags: loc (named place), obj (detectable object), noun, verb, adj, adv\n")
        for w, tag, v in rows:
            f.write(", ".join([w, tag] + [f"{x:.6f}" for x in v]) + "\n")
    print(f"{len(rows)} words, {n} clusters -> {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "assets/lexicon.txt")
