"""Capability charts of reconfigurable converter designs, two-feeder view.

Walks through the three sizing strategies, enumerates the capacity splits
each one can realise, and evaluates the chart volume in all four modes
against the closed-form references.  Writes the reactive-chart staircase
corners to capability_corners.csv for plotting.
"""

import csv

from mopkit import (
    bisection_sizing,
    compute_table1,
    enumerate_capacity_vectors,
    fixed_sop,
    golden_sizing,
    idealised,
    max_power_transfer,
    statcom_ccv_staircase,
    uniform_sizing,
)
from mopkit.analytic import reactive_chart_polygon

designs = {
    "fixed(2)": fixed_sop(2),
    "uniform(3)": uniform_sizing(3),
    "bisection(3)": bisection_sizing(3),
    "golden(3)": golden_sizing(3),
}

print("Converter sizings (pu of the total device):")
for label, d in designs.items():
    print(f"  {label:13s} alphas = {tuple(round(a, 6) for a in d.alphas)}")

print("\nDistinct per-feeder capacity splits over all multiplexer states:")
for label, d in designs.items():
    vecs = enumerate_capacity_vectors(d, 2)
    pretty = ", ".join(f"({v.caps[0]:.3f}, {v.caps[1]:.3f})" for v in vecs)
    print(f"  {label:13s} {len(vecs)} splits: {pretty}")

print("\nPair transfer limits and reactive-chart areas:")
for label, d in designs.items():
    mpt = max_power_transfer(d, 2).maximum
    area = statcom_ccv_staircase(d)
    print(f"  {label:13s} max transfer {mpt:.4f} pu   reactive area {area:.4f}")
print(f"  {'idealised':13s} max transfer {max_power_transfer(idealised(), 2).maximum:.4f} pu"
      "   reactive area 2.0000 (budget square)")

print("\nFull reference table (volume per mode):")
print(f"  {'design':13s} {'mpt':>8s} {'upf':>8s} {'statcom':>8s} {'pq':>8s}")
for row in compute_table1():
    print(f"  {row['design']:13s} {row['mpt']:8.4f} {row['upf']:8.4f} "
          f"{row['statcom']:8.4f} {row['pq']:8.4f}")

# staircase corners of the first-quadrant reactive charts, one row per corner
with open("capability_corners.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["design", "q1", "q2"])
    for label, d in designs.items():
        for q1, q2 in reactive_chart_polygon(d):
            writer.writerow([label, q1, q2])
print("\nwrote capability_corners.csv")
