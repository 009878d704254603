"""Writes the bundled building descriptions.

    python3 generate.py [output_dir]

The material data are representative values, not measurements.
"""

import json
import sys
from pathlib import Path

RHO_CP_AIR = 1.2 * 1005.0
H_OUT = 25.0  # W/m2K, external surface
H_CONV = 3.0  # W/m2K, internal surface to air
H_RAD = 5.0  # W/m2K, internal surface to radiant star

STEEL = {"lambda": 50.0, "rho_c": 7800.0 * 500.0}
FOAM = {"lambda": 0.025, "rho_c": 35.0 * 1400.0}
CHIPBOARD = {"lambda": 0.13, "rho_c": 650.0 * 1700.0}
CONCRETE = {"lambda": 1.4, "rho_c": 2300.0 * 880.0}
SOIL = {"lambda": 1.5, "rho_c": 1800.0 * 1000.0}
GLASS_RHO_C = 2500.0 * 750.0


class Circuit:
    def __init__(self):
        self.nodes, self.branches, self.flows, self.zones = [], [], [], []

    def node(self, name, capacity):
        self.nodes.append({"id": name, "capacity": round(capacity, 6)})
        return name

    def branch(self, a, b, g, source=None):
        br = {"id": f"g{len(self.branches)}", "from": a, "to": b, "conductance": round(g, 9)}
        if source:
            br["temperature_source"] = source
        self.branches.append(br)

    def doc(self):
        d = {"nodes": self.nodes, "branches": self.branches, "flow_sources": self.flows}
        if self.zones:
            d["zones"] = self.zones
        return d


def wall(c, name, area, outside, inside, layers, out_source=None, h_out=H_OUT):
    """Layers from outside to inside, each (material, thickness, nodes).
    Returns the inner surface node."""
    prev, g_prev, src = outside, h_out * area, out_source
    for k, (mat, d, parts) in enumerate(layers):
        for p in range(parts):
            n = c.node(f"{name}_{k}{'ab'[p] if parts > 1 else ''}", mat["rho_c"] * d / parts * area)
            half = 2.0 * mat["lambda"] * parts / d * area
            c.branch(prev, n, 1.0 / (1.0 / g_prev + 1.0 / half), src)
            src = None
            prev, g_prev = n, half
    c.branch(prev, inside["air"], 1.0 / (1.0 / g_prev + 1.0 / (H_CONV * area)))
    c.branch(prev, inside["star"], H_RAD * area)
    return prev


def zone_nodes(c, name, volume, area, heater_capacity, heater_g, furniture):
    air = c.node(f"{name}_air", RHO_CP_AIR * volume)
    star = c.node(f"{name}_star", 0.0)
    heater = c.node(f"{name}_heater", heater_capacity)
    c.branch(heater, air, heater_g)
    furn = c.node(f"{name}_furniture", furniture[0])
    c.branch(furn, air, furniture[1])
    c.branch(furn, star, furniture[2])
    power = f"P_{name}"
    c.flows.append({"node": heater, "source_name": power})
    c.zones.append({"id": name, "air_node": air, "floor_area": area, "volume": volume,
                    "heater": power})
    return {"air": air, "star": star}


def bungalow():
    c = Circuit()
    area, height = 13.5, 2.5
    volume = area * height
    z = zone_nodes(c, "room", volume, area, 3000.0, 150.0, (5.5e5, 40.0, 60.0))
    panel = [(STEEL, 0.0005, 1), (FOAM, 0.04, 1), (STEEL, 0.0005, 1)]
    wall(c, "ceiling", area, "REF", z, panel, "T_o")
    # north+south and east+west walls
    for side in ("ns", "ew"):
        wall(c, f"wall_{side}", 37.6 / 2.0, "REF", z, panel, "T_o")
    floor = [(STEEL, 0.0005, 1), (FOAM, 0.06, 1), (CHIPBOARD, 0.022, 1)]
    wall(c, "floor", area, "REF", z, floor, "T_o", h_out=8.0)
    glass = c.node("window", GLASS_RHO_C * 0.004 * 3.88)
    c.branch("REF", glass, H_OUT * 3.88, "T_o")
    c.branch(glass, z["air"], 1.0 / (1.0 / (3.88 * 2.0 * 1.0 / 0.004) + 1.0 / (H_CONV * 3.88)))
    c.branch(glass, z["star"], H_RAD * 3.88 * 0.35)
    c.branch("REF", z["air"], RHO_CP_AIR * volume * 0.5 / 3600.0, "T_o")
    return c.doc()


def house():
    """Two floors of 93.3 m2 each, 502 m3 in total. Brick walls with external
    mineral wool, insulated ceiling, slab on insulation over the ground."""
    c = Circuit()
    brick = {"lambda": 1.0, "rho_c": 1800.0 * 880.0}
    wool = {"lambda": 0.035, "rho_c": 30.0 * 1030.0}
    area, volume, walls, windows = 93.3, 251.0, 93.0, 12.0
    h_in = H_CONV + H_RAD
    zones = {}
    for name in ("ground_floor", "first_floor"):
        z = zone_nodes(c, name, volume, area, 4000.0, 200.0, (1.0e6, 100.0, 100.0))
        # combined internal surface coefficient: the star node is merged into air
        c.branch(z["star"], z["air"], 1e4)
        wall(c, f"{name}_wall", walls, "REF", z, [(wool, 0.16, 1), (brick, 0.16, 1), (brick, 0.02, 1)], "T_o")
        c.branch("REF", z["air"], 1.0 * windows, "T_o")
        c.branch("REF", z["air"], RHO_CP_AIR * volume * 0.34 / 20.0 / 3600.0, "T_o")
        zones[name] = z
    roof = [(wool, 0.54, 1)]
    wall(c, "roof", area, "REF", zones["first_floor"], roof, "T_o")
    soil = c.node("soil", SOIL["rho_c"] * 0.5 * area)
    c.branch("REF", soil, SOIL["lambda"] / 1.0 * area, "T_g")
    eps = {"lambda": 0.035, "rho_c": 25.0 * 1450.0}
    wall(c, "slab", area, soil, zones["ground_floor"], [(eps, 0.31, 1), (CONCRETE, 0.25, 1)],
         h_out=SOIL["lambda"] / 0.25)
    wall(c, "mid_floor", area, zones["first_floor"]["air"], zones["ground_floor"],
         [(CONCRETE, 0.1, 1), (CONCRETE, 0.1, 1)], h_out=h_in)
    c.branch(zones["ground_floor"]["air"], zones["first_floor"]["air"], 30.0)
    return c.doc()


def ladder():
    c = Circuit()
    caps = [2e5, 8e5, 3e6, 8e5, 2e5]
    names = [c.node(f"n{k + 1}", cap) for k, cap in enumerate(caps)]
    c.branch("REF", names[0], 60.0, "T_o")
    for a, b, g in zip(names, names[1:], (40.0, 150.0, 150.0, 40.0)):
        c.branch(a, b, g)
    c.branch("REF", names[-1], 30.0, "T_g")
    c.flows.append({"node": "n3", "source_name": "P"})
    return c.doc()


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    for name, doc in (("bungalow", bungalow()), ("house", house()), ("ladder", ladder())):
        (out / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
