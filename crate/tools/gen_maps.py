"""Generate the demo semantic maps in assets/maps as run-length encoded JSON."""

import json
from pathlib import Path

RES = 0.05
OUT = Path(__file__).resolve().parent.parent / "assets" / "maps"


class Grid:
    def __init__(self, width_m, height_m):
        self.w = round(width_m / RES)
        self.h = round(height_m / RES)
        self.cells = [["." for _ in range(self.w)] for _ in range(self.h)]

    def rect(self, x0, y0, x1, y1, ch="#"):
        """Fill every cell whose center lies inside the rectangle."""
        for j in range(self.h):
            cy = (j + 0.5) * RES
            if not (y0 <= cy <= y1):
                continue
            for i in range(self.w):
                cx = (i + 0.5) * RES
                if x0 <= cx <= x1:
                    self.cells[j][i] = ch

    def border(self, t=0.2):
        wm, hm = self.w * RES, self.h * RES
        self.rect(0, 0, wm, t)
        self.rect(0, hm - t, wm, hm)
        self.rect(0, 0, t, hm)
        self.rect(wm - t, 0, wm, hm)

    def rle(self):
        rows = []
        for j in reversed(range(self.h)):
            row = self.cells[j]
            out, i = [], 0
            while i < len(row):
                k = i
                while k < len(row) and row[k] == row[i]:
                    k += 1
                out.append(f"{k - i}{row[i]}")
                i = k
            rows.append("".join(out))
        return rows


def static(oid, label, x, y, r):
    return {"id": oid, "label": label, "radius": r, "x": x, "y": y}


def walker(oid, label, r, speed, waypoints, phase=0.0):
    return {
        "id": oid,
        "label": label,
        "radius": r,
        "motion": {"type": "waypoint_loop", "speed": speed, "waypoints": waypoints},
        "phase": phase,
    }


def scene1():
    g = Grid(16.0, 10.0)
    g.border()
    # laboratory, lower left, door on its top wall
    g.rect(0, 3.4, 2.0, 3.6)
    g.rect(3.0, 3.4, 5.0, 3.6)
    g.rect(4.8, 0, 5.0, 3.6)
    # lift shaft, upper left
    g.rect(0, 8.2, 2.6, 10)
    # information desk counter
    g.rect(7.0, 8.6, 9.0, 9.2)
    # restaurant, right side, open towards the hall
    g.rect(11.9, 0, 12.1, 3.5)
    g.rect(11.9, 6.5, 12.1, 10)
    # pillars in the hall
    g.rect(5.6, 7.4, 6.0, 7.8)
    g.rect(9.6, 2.2, 10.0, 2.6)
    return {
        "name": "scene1",
        "resolution": RES,
        "origin": [0.0, 0.0],
        "grid": {"rle": g.rle()},
        "start": {"x": 2.0, "y": 5.0, "heading": 0.0},
        "locations": [
            {"name": "restaurant", "x": 13.8, "y": 5.0},
            {"name": "information desk", "x": 8.0, "y": 8.0},
            {"name": "laboratory", "x": 2.5, "y": 1.8},
            {"name": "lift", "x": 1.3, "y": 7.6},
            {"name": "hall", "x": 8.0, "y": 5.0},
            {"name": "rest region", "x": 10.6, "y": 1.2},
            {"name": "workstation", "x": 4.0, "y": 8.8},
        ],
        "objects": [
            static(1, "person", 6.0, 5.55, 0.25),
            static(2, "person", 8.4, 4.45, 0.25),
            static(3, "person", 10.3, 5.5, 0.25),
            static(4, "table", 14.0, 8.0, 0.4),
            static(5, "chair", 14.0, 2.0, 0.25),
            walker(6, "person", 0.25, 0.4, [[6.5, 1.2], [9.0, 1.2]]),
        ],
    }


def scene2():
    g = Grid(30.0, 16.0)
    g.border()
    g.rect(1.0, 9.5, 6.0, 15.0)      # office building
    g.rect(8.0, 10.0, 13.0, 15.0)    # school
    g.rect(15.0, 10.0, 18.5, 15.0)   # thrift shop
    g.rect(21.0, 0, 24.0, 5.6)       # post office
    g.rect(25.5, 0, 30.0, 4.8)       # restaurant
    g.rect(26.5, 12.5, 30.0, 16.0)   # cafe
    # fence around the playground with an opening to the plaza
    g.rect(0.2, 7.2, 2.5, 7.4)
    g.rect(4.5, 7.2, 7.0, 7.4)
    cafe_loop = [[21.0, 8.0], [29.0, 8.0], [29.0, 11.0], [21.0, 11.0]]
    return {
        "name": "scene2",
        "resolution": RES,
        "origin": [0.0, 0.0],
        "grid": {"rle": g.rle()},
        "start": {"x": 15.5, "y": 3.5, "heading": 0.0},
        "locations": [
            {"name": "post office", "x": 20.2, "y": 3.5},
            {"name": "office building", "x": 3.5, "y": 8.8},
            {"name": "school", "x": 10.5, "y": 9.2},
            {"name": "thrift shop", "x": 16.75, "y": 9.2},
            {"name": "restaurant", "x": 27.5, "y": 5.8},
            {"name": "cafe", "x": 27.0, "y": 10.0},
            {"name": "playground", "x": 3.5, "y": 6.2},
        ],
        "objects": [
            # constraint course along the plaza, in the order they are added
            static(1, "person", 17.0, 3.3, 0.25),
            static(2, "bicycle", 18.6, 3.35, 0.25),
            static(3, "cone", 16.4, 3.35, 0.1),
            static(4, "box", 19.1, 3.35, 0.1),
            static(5, "dog", 18.1, 3.65, 0.1),
            static(6, "suitcase", 19.5, 3.3, 0.1),
            static(7, "table", 11.5, 7.6, 0.4),
            static(8, "bench", 6.0, 6.6, 0.3),
            walker(9, "person", 0.25, 0.5, cafe_loop),
            walker(10, "person", 0.25, 0.5, cafe_loop, phase=11.0),
        ],
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for scene in (scene1(), scene2()):
        path = OUT / f"{scene['name']}.json"
        path.write_text(json.dumps(scene, indent=1) + "\n")
        print(path)


if __name__ == "__main__":
    main()
