"""Radial distribution network model, sweep power flow, and loss surrogate.

Balanced positive-sequence modelling on a per-unit base.  The power flow
is a backward/forward sweep on the tree rooted at the slack bus; the loss
surrogate is a positive-semidefinite quadratic in the device terminal
injections, fitted by central finite differences of the exact solver
around the nominal operating point.

Sign convention: terminal injections are positive when power is delivered
INTO the network (the device modules use the opposite, device-inflow
convention and negate at this boundary).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import NetworkDataError, PowerFlowError

HOURS = 24


@dataclass
class Bus:
    id: int
    p_kw: float = 0.0
    q_kvar: float = 0.0
    gen_kw: float = 0.0
    profile: str = "none"


@dataclass
class Branch:
    from_bus: int
    to_bus: int
    r_ohm: float
    x_ohm: float


@dataclass
class NetworkCase:
    """Radial case: tree of branches, loads/generators, device terminals."""

    name: str
    base_kva: float
    base_kv: float
    slack: int
    buses: list[Bus]
    branches: list[Branch]
    terminals: list[int]
    profiles: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self._validate()
        self._build_topology()

    # -- validation -------------------------------------------------------

    def _validate(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise NetworkDataError("duplicate bus ids")
        id_set = set(ids)
        if self.slack not in id_set:
            raise NetworkDataError(f"slack bus {self.slack} not defined")
        for br in self.branches:
            if br.from_bus not in id_set or br.to_bus not in id_set:
                raise NetworkDataError(
                    f"branch {br.from_bus}-{br.to_bus} references an unknown bus"
                )
        if len(self.branches) > len(self.buses) - 1:
            raise NetworkDataError("cyclic branch list: more branches than tree edges")
        if len(self.branches) < len(self.buses) - 1:
            raise NetworkDataError("disconnected network: fewer branches than tree edges")
        if len(set(self.terminals)) != len(self.terminals):
            raise NetworkDataError("terminal bus ids must be distinct")
        for tid in self.terminals:
            if tid not in id_set:
                raise NetworkDataError(f"terminal bus {tid} not defined")
        if self.base_kva <= 0 or self.base_kv <= 0:
            raise NetworkDataError("base kVA and kV must be positive")
        for name, series in self.profiles.items():
            arr = np.asarray(series, dtype=float)
            if arr.shape != (HOURS,):
                raise NetworkDataError(f"profile {name!r} must have {HOURS} entries")
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise NetworkDataError(f"profile {name!r} multipliers must lie in [0, 1]")
            self.profiles[name] = arr

    def _build_topology(self):
        n = len(self.buses)
        self._pos = {b.id: k for k, b in enumerate(self.buses)}
        adjacency: dict[int, list[tuple[int, int]]] = {b.id: [] for b in self.buses}
        for bi, br in enumerate(self.branches):
            adjacency[br.from_bus].append((br.to_bus, bi))
            adjacency[br.to_bus].append((br.from_bus, bi))

        z_base = self.base_kv**2 * 1000.0 / self.base_kva
        order = [self._pos[self.slack]]
        parent = np.full(n, -1, dtype=int)
        z_pu = np.zeros(n, dtype=complex)
        seen = {self.slack}
        queue = [self.slack]
        while queue:
            bus_id = queue.pop(0)
            for other, bi in adjacency[bus_id]:
                if other in seen:
                    continue
                seen.add(other)
                k = self._pos[other]
                parent[k] = self._pos[bus_id]
                br = self.branches[bi]
                z_pu[k] = complex(br.r_ohm, br.x_ohm) / z_base
                order.append(k)
                queue.append(other)
        if len(seen) != n:
            raise NetworkDataError("network is not connected to the slack bus")
        self._order = np.array(order, dtype=int)
        self._parent = parent
        self._z_pu = z_pu
        self._terminal_pos = np.array([self._pos[t] for t in self.terminals], dtype=int)

    # -- accessors ---------------------------------------------------------

    @property
    def n_terminals(self) -> int:
        return len(self.terminals)

    def multiplier(self, profile: str, t: int | None) -> float:
        if t is None or profile == "none":
            return 1.0
        if profile not in self.profiles:
            raise NetworkDataError(f"profile {profile!r} not defined for case {self.name!r}")
        return float(self.profiles[profile][t])

    def nodal_power_pu(self, t: int | None) -> np.ndarray:
        """Net complex power consumed at each bus (pu), before device injections.

        Loads follow the demand series; generator output follows the bus's
        named profile ('none' means constant).
        """
        s = np.zeros(len(self.buses), dtype=complex)
        load_mult = self.multiplier("demand", t) if "demand" in self.profiles else 1.0
        for k, b in enumerate(self.buses):
            mult = load_mult if t is not None else 1.0
            s[k] = complex(b.p_kw, b.q_kvar) * mult
            if b.gen_kw:
                s[k] -= b.gen_kw * self.multiplier(b.profile, t)
        return s / self.base_kva


@dataclass
class PowerFlowResult:
    voltages: dict[int, complex]
    loss_kw: float
    iterations: int
    slack_kw: complex

    @property
    def converged(self) -> bool:
        return True  # non-convergence raises instead


def solve_power_flow(
    case: NetworkCase,
    t: int | None = None,
    extra_injections_kw=None,
    tol: float = 1e-9,
    max_sweeps: int = 200,
) -> PowerFlowResult:
    """Backward/forward sweep power flow on the radial case.

    ``extra_injections_kw`` holds one complex power per device terminal
    (kW + j kVAr), positive when delivered into the network.  Converged
    when the largest voltage update falls below ``tol`` pu.
    """
    s_pu = case.nodal_power_pu(t)
    if extra_injections_kw is not None:
        inj = np.asarray(extra_injections_kw, dtype=complex)
        if inj.shape != (case.n_terminals,):
            raise ValueError(
                f"expected {case.n_terminals} terminal injections, got {inj.shape}"
            )
        s_pu[case._terminal_pos] -= inj / case.base_kva

    order = case._order
    parent = case._parent
    z = case._z_pu
    down = order[1:][::-1]

    v = np.ones(len(case.buses), dtype=complex)
    for sweep in range(1, max_sweeps + 1):
        i_acc = np.conj(s_pu / v)
        for k in down:  # children accumulate into parents
            i_acc[parent[k]] += i_acc[k]
        v_new = v.copy()
        for k in order[1:]:
            v_new[k] = v_new[parent[k]] - z[k] * i_acc[k]
        dv = np.abs(v_new - v).max()
        v = v_new
        if dv < tol:
            break
    else:
        raise PowerFlowError(f"sweep power flow did not converge in {max_sweeps} sweeps")

    i_acc = np.conj(s_pu / v)
    for k in down:
        i_acc[parent[k]] += i_acc[k]
    loss_pu = float(np.sum(z[order[1:]].real * np.abs(i_acc[order[1:]]) ** 2))
    slack_pos = case._pos[case.slack]
    slack_pu = v[slack_pos] * np.conj(i_acc[slack_pos])
    voltages = {b.id: complex(v[k]) for k, b in enumerate(case.buses)}
    return PowerFlowResult(voltages, loss_pu * case.base_kva, sweep, slack_pu * case.base_kva)


# ---------------------------------------------------------------------------
# Quadratic loss surrogate
# ---------------------------------------------------------------------------

@dataclass
class QuadraticLossModel:
    """Network losses as a PSD quadratic in device terminal injections.

    Injections are per-unit on the device base, ordered real parts first
    then imaginary parts; the value is loss in the same per-unit.
    """

    q_matrix: np.ndarray
    q_vec: np.ndarray
    c_scalar: float
    capacity_kva: float
    m: int
    min_eig_raw: float
    step: float

    def evaluate(self, injections_pu) -> float:
        x = np.asarray(injections_pu, dtype=float)
        return float(x @ self.q_matrix @ x + self.q_vec @ x + self.c_scalar)

    def predict_loss_kw(self, injections_pu) -> float:
        return self.evaluate(injections_pu) * self.capacity_kva


def build_quadratic_loss_model(
    case: NetworkCase,
    t: int | None,
    capacity_kva: float,
    step: float = 0.01,
) -> QuadraticLossModel:
    """Fit the loss quadratic by central finite differences of the sweep solver.

    Gradient and Hessian in each of the 2m injection coordinates at the
    nominal (zero-injection) flow.  The gradient probes at step/2 (half
    the Hessian step) to keep its truncation error well below the loss
    sensitivities; the Hessian is symmetrised and its negative eigenvalues
    clipped to zero so downstream subproblems stay convex.
    """
    m = case.n_terminals
    dim = 2 * m

    def loss(x: np.ndarray) -> float:
        inj = (x[:m] + 1j * x[m:]) * capacity_kva
        return solve_power_flow(case, t, inj).loss_kw / capacity_kva

    h = step
    l0 = loss(np.zeros(dim))
    lp = np.empty(dim)
    lm = np.empty(dim)
    grad = np.empty(dim)
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = h
        lp[i] = loss(e)
        lm[i] = loss(-e)
        grad[i] = (loss(e / 2.0) - loss(-e / 2.0)) / h
    hess = np.zeros((dim, dim))
    np.fill_diagonal(hess, (lp - 2.0 * l0 + lm) / (h * h))
    for i in range(dim):
        for j in range(i + 1, dim):
            ei = np.zeros(dim)
            ej = np.zeros(dim)
            ei[i] = h
            ej[j] = h
            val = (
                loss(ei + ej) - loss(ei - ej) - loss(-ei + ej) + loss(-ei - ej)
            ) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = val

    q_raw = 0.5 * (hess + hess.T) / 2.0
    eigval, eigvec = np.linalg.eigh(q_raw)
    min_eig = float(eigval.min())
    q_psd = (eigvec * np.clip(eigval, 0.0, None)) @ eigvec.T
    q_psd = 0.5 * (q_psd + q_psd.T)
    return QuadraticLossModel(q_psd, grad, l0, capacity_kva, m, min_eig, step)


# ---------------------------------------------------------------------------
# Case files
# ---------------------------------------------------------------------------

def load_network(path, profiles_path=None) -> NetworkCase:
    """Read a case from the JSON schema, with schema-violation diagnostics.

    Schema: {"name", "base": {"kva", "kv"}, "slack", "buses": [{"id",
    "p_kw", "q_kvar", "gen_kw", "profile"}], "branches": [{"from", "to",
    "r_ohm", "x_ohm"}], "terminals": [ids]}.
    """
    text = path.read_text() if hasattr(path, "read_text") else open(path).read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkDataError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")

    def need(mapping, key, where):
        if key not in mapping:
            raise NetworkDataError(f"missing key {key!r} in {where}")
        return mapping[key]

    base = need(obj, "base", "case")
    buses = []
    for i, rec in enumerate(need(obj, "buses", "case")):
        buses.append(
            Bus(
                id=int(need(rec, "id", f"buses[{i}]")),
                p_kw=float(rec.get("p_kw", 0.0)),
                q_kvar=float(rec.get("q_kvar", 0.0)),
                gen_kw=float(rec.get("gen_kw", 0.0)),
                profile=str(rec.get("profile", "none")),
            )
        )
    branches = []
    for i, rec in enumerate(need(obj, "branches", "case")):
        branches.append(
            Branch(
                from_bus=int(need(rec, "from", f"branches[{i}]")),
                to_bus=int(need(rec, "to", f"branches[{i}]")),
                r_ohm=float(need(rec, "r_ohm", f"branches[{i}]")),
                x_ohm=float(need(rec, "x_ohm", f"branches[{i}]")),
            )
        )
    profiles = load_profiles(profiles_path) if profiles_path is not None else {}
    return NetworkCase(
        name=str(obj.get("name", "unnamed")),
        base_kva=float(need(base, "kva", "base")),
        base_kv=float(need(base, "kv", "base")),
        slack=int(need(obj, "slack", "case")),
        buses=buses,
        branches=branches,
        terminals=[int(x) for x in obj.get("terminals", [])],
        profiles=profiles,
    )


def load_profiles(path) -> dict[str, np.ndarray]:
    """Read hour,demand,wind,solar multiplier rows (24 hours, values in [0, 1])."""
    text = path.read_text() if hasattr(path, "read_text") else open(path).read()
    reader = csv.DictReader(text.splitlines())
    needed = {"hour", "demand", "wind", "solar"}
    if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
        raise NetworkDataError(f"profiles CSV needs columns {sorted(needed)}")
    rows = list(reader)
    if len(rows) != HOURS:
        raise NetworkDataError(f"profiles CSV needs {HOURS} rows, got {len(rows)}")
    out = {name: np.zeros(HOURS) for name in ("demand", "wind", "solar")}
    for rec in rows:
        hour = int(rec["hour"])
        if not 0 <= hour < HOURS:
            raise NetworkDataError(f"hour {hour} out of range")
        for name in ("demand", "wind", "solar"):
            out[name][hour] = float(rec[name])
    for name, arr in out.items():
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise NetworkDataError(f"profile {name!r} multipliers must lie in [0, 1]")
    return out


def _data_dir():
    return resources.files("mopkit").joinpath("data")


def bundled_cases() -> dict[str, NetworkCase]:
    """The bundled cases: a 33-bus feeder analog and two small fixtures."""
    data = _data_dir()
    return {
        "ieee33_style": load_network(
            data.joinpath("ieee33_mop.json"), data.joinpath("profiles_default.csv")
        ),
        "two_bus_fixture": load_network(data.joinpath("two_bus.json")),
        "star_fixture": load_network(data.joinpath("star4.json")),
    }
