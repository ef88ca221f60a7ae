"""The node-allocation MILP as explicit matrices.

Variables per job j and node n: assignment ``x[j,n]``, job-size
indicators ``yl[j]``/``yu[j]``, XOR helpers ``u[j,n]``, migration switch
``z[j]``, rescale-direction indicators ``zu[j]``/``zd[j]`` and SOS2
weights ``w[j,i]`` over the job's curve grid.  Everything but ``w`` is
binary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import ClusterState
from .objective import SolveConfig, current_value, metric_curve

FAMILIES = ("job_size", "node", "xor", "migration", "rescale", "sos2")


@dataclass
class MilpProblem:
    state: ClusterState
    cfg: SolveConfig
    big_m: int
    nodes: list[str]
    names: list[str]
    binary: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    ub_family: list[str]
    A_eq: np.ndarray
    b_eq: np.ndarray
    eq_family: list[str]
    x: np.ndarray
    u: np.ndarray
    yl: np.ndarray
    yu: np.ndarray
    z: np.ndarray
    zu: np.ndarray
    zd: np.ndarray
    w: list[np.ndarray]
    sos2: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def variable_counts(self) -> dict[str, int]:
        return {
            "x": int(self.x.size),
            "y": int(self.yl.size + self.yu.size),
            "u": int(self.u.size),
            "z": int(self.z.size),
            "direction": int(self.zu.size + self.zd.size),
            "w": int(sum(a.size for a in self.w)),
        }

    def families(self) -> set[str]:
        return set(self.ub_family) | set(self.eq_family)

    def objective(self, values: np.ndarray) -> float:
        return float(self.c @ values)


class _Builder:
    def __init__(self):
        self.names: list[str] = []
        self.binary: list[bool] = []
        self.ub_rows: list[tuple[dict, float, str]] = []
        self.eq_rows: list[tuple[dict, float, str]] = []

    def var(self, name: str, binary: bool = True) -> int:
        self.names.append(name)
        self.binary.append(binary)
        return len(self.names) - 1

    def le(self, coefs: dict, rhs: float, family: str):
        self.ub_rows.append((coefs, float(rhs), family))

    def eq(self, coefs: dict, rhs: float, family: str):
        self.eq_rows.append((coefs, float(rhs), family))

    def matrix(self, rows):
        A = np.zeros((len(rows), len(self.names)))
        for i, (coefs, _, _) in enumerate(rows):
            for k, v in coefs.items():
                A[i, k] += v
        return A, np.array([r[1] for r in rows]), [r[2] for r in rows]


def _plus(*parts: dict) -> dict:
    out: dict = {}
    for p in parts:
        for k, v in p.items():
            out[k] = out.get(k, 0.0) + v
    return out


def build_milp(state: ClusterState, cfg: SolveConfig) -> MilpProblem:
    nodes = sorted(state.idle_nodes)
    N, J = len(nodes), len(state.jobs)
    M = cfg.resolve_big_m(N)
    b = _Builder()

    x = np.array([[b.var(f"x_{j}_{n}") for n in range(N)] for j in range(J)], dtype=np.int64).reshape(J, N)
    yl = np.array([b.var(f"yl_{j}") for j in range(J)], dtype=np.int64)
    yu = np.array([b.var(f"yu_{j}") for j in range(J)], dtype=np.int64)
    u = np.array([[b.var(f"u_{j}_{n}") for n in range(N)] for j in range(J)], dtype=np.int64).reshape(J, N)
    z = np.array([b.var(f"z_{j}") for j in range(J)], dtype=np.int64)
    zu = np.array([b.var(f"zu_{j}") for j in range(J)], dtype=np.int64)
    zd = np.array([b.var(f"zd_{j}") for j in range(J)], dtype=np.int64)
    w = [
        np.array([b.var(f"w_{j}_{i}", binary=False) for i in range(len(slot.spec.curve.grid))],
                 dtype=np.int64)
        for j, slot in enumerate(state.jobs)
    ]

    obj = {}
    sos2 = []
    node_pos = {n: i for i, n in enumerate(nodes)}
    for j, slot in enumerate(state.jobs):
        spec = slot.spec
        C = slot.count
        cmap = np.zeros(N)
        for n in slot.nodes:
            cmap[node_pos[n]] = 1.0
        size = {int(k): 1.0 for k in x[j]}
        neg_size = {int(k): -1.0 for k in x[j]}

        # job size: N_j = 0 or n_min <= N_j <= n_max
        # a job whose minimum exceeds the pool still needs yl = 1 feasible
        b.le(_plus(neg_size, {int(yl[j]): -max(M, spec.n_min)}), -spec.n_min, "job_size")
        b.le(_plus(size, {int(yl[j]): M}), M, "job_size")
        b.le(_plus(size, {int(yu[j]): -M}), spec.n_max, "job_size")
        b.le(_plus(size, {int(yu[j]): M}), M, "job_size")

        # u = x XOR c
        for n in range(N):
            xi, ui, cj = int(x[j, n]), int(u[j, n]), cmap[n]
            b.le({ui: 1.0, xi: -1.0}, cj, "xor")
            b.le({ui: -1.0, xi: 1.0}, cj, "xor")
            b.le({ui: -1.0, xi: -1.0}, -cj, "xor")
            b.le({ui: 1.0, xi: 1.0}, 2.0 - cj, "xor")

        # no migration: the changed set is all additions or all removals.
        # sum(u) = N_j + C - 2|x & c|, so the switched-off side needs slack
        # 2C (additions row) or 2N (removals row); M = N + 1 is too small.
        usum = {int(k): 1.0 for k in u[j]}
        b.le(_plus(neg_size, usum, {int(z[j]): -2.0 * C}), -C, "migration")
        b.le(_plus(size, usum, {int(z[j]): 2.0 * N}), 2.0 * N + C, "migration")

        # rescale direction indicators
        b.le(_plus(size, {int(zu[j]): -(M - C)}), C, "rescale")
        b.le(_plus(neg_size, {int(zu[j]): C + 1}), 0.0, "rescale")
        b.le(_plus(size, {int(zd[j]): M - C + 1}), M, "rescale")
        b.le(_plus(neg_size, {int(zd[j]): -C}), -C, "rescale")

        # SOS2 piecewise-linear metric; weights vanish when the job idles
        grid = np.array(spec.curve.grid, float)
        f = metric_curve(spec.curve, cfg.metric)
        b.eq(_plus({int(k): 1.0 for k in w[j]}, {int(yl[j]): 1.0}), 1.0, "sos2")
        b.eq(_plus({int(k): g for k, g in zip(w[j], grid)}, neg_size), 0.0, "sos2")
        sos2.append((w[j], grid))

        for k, s in zip(w[j], f.rates):
            obj[int(k)] = cfg.t_fwd_s * s
        cur = current_value(f, C) if C else 0.0
        obj[int(zu[j])] = -cur * spec.r_up_s
        obj[int(zd[j])] = -cur * spec.r_dw_s

    # each node serves at most one job
    for n in range(N):
        if J:
            b.le({int(x[j, n]): 1.0 for j in range(J)}, 1.0, "node")

    nv = len(b.names)
    c = np.zeros(nv)
    for k, v in obj.items():
        c[k] = v
    A_ub, b_ub, fam_ub = b.matrix(b.ub_rows)
    A_eq, b_eq, fam_eq = b.matrix(b.eq_rows)
    return MilpProblem(
        state=state, cfg=cfg, big_m=M, nodes=nodes, names=b.names,
        binary=np.array(b.binary, bool), lb=np.zeros(nv), ub=np.ones(nv), c=c,
        A_ub=A_ub, b_ub=b_ub, ub_family=fam_ub, A_eq=A_eq, b_eq=b_eq, eq_family=fam_eq,
        x=x, u=u, yl=yl, yu=yu, z=z, zu=zu, zd=zd, w=w, sos2=sos2,
    )


def _fmt_terms(coefs: np.ndarray, names: list[str]) -> str:
    parts = []
    for k in np.flatnonzero(coefs):
        v = coefs[k]
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v):.12g} {names[k]}")
    if not parts:
        return "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def to_lp_format(problem: MilpProblem) -> str:
    """CPLEX-LP style text dump, for cross-checking with external solvers."""
    names = problem.names
    out = ["\\ node allocation MILP", "Maximize", f" obj: {_fmt_terms(problem.c, names)}",
           "Subject To"]
    for i, (row, rhs) in enumerate(zip(problem.A_ub, problem.b_ub)):
        out.append(f" {problem.ub_family[i]}_{i}: {_fmt_terms(row, names)} <= {rhs:.12g}")
    for i, (row, rhs) in enumerate(zip(problem.A_eq, problem.b_eq)):
        out.append(f" {problem.eq_family[i]}_eq_{i}: {_fmt_terms(row, names)} = {rhs:.12g}")
    out.append("Bounds")
    for k in np.flatnonzero(~problem.binary):
        out.append(f" {problem.lb[k]:.12g} <= {names[k]} <= {problem.ub[k]:.12g}")
    out.append("Binaries")
    out.append(" " + " ".join(names[k] for k in np.flatnonzero(problem.binary)))
    if problem.sos2:
        out.append("SOS")
        for j, (idx, grid) in enumerate(problem.sos2):
            terms = " ".join(f"{names[k]}:{g:.12g}" for k, g in zip(idx, grid))
            out.append(f" s2_{j}: S2:: {terms}")
    out.append("End")
    return "\n".join(out) + "\n"
