"""How much converter capacity does reconfiguration save?

Fixes the service level at what a 100 kVA hard-wired device delivers on
the bundled 33-bus analog, then secant-searches the capacity at which
reconfigurable designs deliver the same benefit.  The gap is the capacity
(and cost) saving of the multiplexed approach.
"""

from mopkit import (
    SchedulerConfig,
    bundled_cases,
    equivalent_capacity_search,
    fixed_sop,
    golden_sizing,
    schedule_horizon,
)

case = bundled_cases()["ieee33_style"]
cfg = SchedulerConfig(kappa=0.01, device_capacity_kva=100.0)

g_ref = schedule_horizon(case, fixed_sop(4), cfg).g_star
print(f"hard-wired 100 kVA device: benefit {g_ref:.2f} kWh/day")

for n in (2, 3, 4):
    design = golden_sizing(n)
    res = equivalent_capacity_search(case, design, g_ref, cfg)
    ratio = res.capacity_kva / cfg.device_capacity_kva
    print(f"golden({n}) needs {res.capacity_kva:6.2f} kVA for the same service "
          f"({ratio * 100:.0f}% of the fixed device, "
          f"{res.iterations} benefit evaluations)")
    for c, g in res.trace:
        print(f"    tried {c:7.2f} kVA -> {g:7.2f} kWh/day")
