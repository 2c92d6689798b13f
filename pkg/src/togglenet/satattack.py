"""Oracle-guided key recovery against the switching network.

The selector vector is treated as an unknown key.  The network's
forward function is Tseitin-encoded to CNF (one mux and one XOR per
switch output; inter-stage wiring is variable renaming, so the clause
count is linear in the switch count).  The classical attack builds a
miter of two key-differentiated copies on a shared input, and while
the miter is satisfiable it extracts a discriminating input, queries
the oracle, and pins both copies to the observed input/output pair.
On UNSAT every remaining key is functionally equivalent on all inputs,
so any key consistent with the recorded pairs is returned.

Routing networks alias heavily (many selector vectors compute the same
map), so success means functional equivalence, not bit equality; the
verdict sweeps all inputs up to n = 16 and samples beyond that.

The attack respects a wall-clock timeout by solving in conflict-budget
chunks; a timed-out run reports the DIPs found so far as a censored
lower bound on the re-key budget.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field

from pysat.solvers import Solver

from .cstn import Topology, Trn, apply_forward, build_topology
from .sbox import KHAZAD_SBOX

# lingeling matches the solver family behind the published attack numbers;
# it has no conflict-budget interface, so hard timeouts go through
# attack_with_deadline (subprocess kill) instead of budget chunks
DEFAULT_SOLVER = "lingeling"
_CONF_BUDGET = 20000


class _VarPool:
    def __init__(self):
        self.top = 0

    def take(self, count: int) -> list[int]:
        first = self.top + 1
        self.top += count
        return list(range(first, first + count))


def _encode_switches(topo: Topology, pool: _VarPool, inputs: list[int],
                     keys: list[int], clauses: list) -> list[int]:
    """Clauses for the whole network; returns output variables.

    Per switch with inputs (a, b), selectors (s, t0, t1):
      m0 = s ? b : a,  m1 = s ? a : b,  o0 = m0 ^ t0,  o1 = m1 ^ t1.
    """
    sw = topo.switches_per_stage
    w = list(inputs)
    for k in range(topo.stages):
        base = 3 * k * sw
        out = [0] * topo.n
        for i in range(sw):
            s, t0, t1 = keys[base + 3 * i: base + 3 * i + 3]
            a, b = w[2 * i], w[2 * i + 1]
            m0, m1, o0, o1 = pool.take(4)
            clauses += [
                (-s, -b, m0), (-s, b, -m0), (s, -a, m0), (s, a, -m0),
                (-a, -b, m0), (a, b, -m0),
                (-s, -a, m1), (-s, a, -m1), (s, -b, m1), (s, b, -m1),
                (-a, -b, m1), (a, b, -m1),
                (-o0, m0, t0), (-o0, -m0, -t0), (o0, -m0, t0), (o0, m0, -t0),
                (-o1, m1, t1), (-o1, -m1, -t1), (o1, -m1, t1), (o1, m1, -t1),
            ]
            out[2 * i], out[2 * i + 1] = o0, o1
        if k < topo.stages - 1:
            wiring = topo.wiring[k]
            w = [0] * topo.n
            for l in range(topo.n):
                w[wiring[l]] = out[l]
        else:
            w = out
    return w


def _encode_sbox(pool: _VarPool, inputs: list[int], clauses: list) -> list[int]:
    """Table encoding of the byte substitution on each 8-bit lane.

    Wire bit i maps to byte i//8 with bit i at the most significant
    position, matching the data path.
    """
    outs = []
    for byte0 in range(0, len(inputs), 8):
        lane_in = inputs[byte0:byte0 + 8]
        lane_out = pool.take(8)
        for v in range(256):
            # v interpreted with lane_in[0] as MSB
            guard = [
                -lane_in[t] if (v >> (7 - t)) & 1 else lane_in[t]
                for t in range(8)
            ]
            sv = KHAZAD_SBOX[v]
            for t in range(8):
                lit = lane_out[t] if (sv >> (7 - t)) & 1 else -lane_out[t]
                clauses.append(tuple(guard) + (lit,))
        outs += lane_out
    return outs


@dataclass
class KeyedCircuit:
    """CNF of the forward function with symbolic input and key variables."""

    topology: Topology
    num_vars: int
    clauses: list
    input_vars: list[int]
    key_vars: list[int]
    output_vars: list[int]

    @classmethod
    def encode(cls, topo: Topology, include_sbox: bool = False) -> "KeyedCircuit":
        pool = _VarPool()
        inputs = pool.take(topo.n)
        keys = pool.take(topo.selector_count)
        clauses: list = []
        outputs = _encode_switches(topo, pool, inputs, keys, clauses)
        if include_sbox:
            outputs = _encode_sbox(pool, outputs, clauses)
        return cls(topo, pool.top, clauses, inputs, keys, outputs)

    def to_dimacs(self) -> str:
        lines = [
            f"c switching-network forward function, n={self.topology.n} "
            f"kind={self.topology.kind.value} m={self.topology.m}",
            f"c inputs {self.input_vars[0]}..{self.input_vars[-1]}",
            f"c keys {self.key_vars[0]}..{self.key_vars[-1]}",
            "c outputs " + " ".join(map(str, self.output_vars)),
            f"p cnf {self.num_vars} {len(self.clauses)}",
        ]
        lines += [" ".join(map(str, cl)) + " 0" for cl in self.clauses]
        return "\n".join(lines) + "\n"


def make_oracle(topo: Topology, trn: Trn, include_sbox: bool = False):
    """Query-access forward function under a hidden configuration."""
    if include_sbox:
        from .sbox import substitute

        return lambda x: substitute(apply_forward(topo, trn, x), topo.n)
    return lambda x: apply_forward(topo, trn, x)


@dataclass
class AttackTrace:
    n: int
    kind: str
    m: int
    iterations: int
    seconds: float
    censored: bool
    dips: list = field(default_factory=list, repr=False)
    recovered: Trn | None = None
    equivalent: bool | None = None

    def report(self) -> dict:
        return {
            "size": self.n,
            "kind": self.kind,
            "m": self.m,
            "iterations": self.iterations,
            "seconds": round(self.seconds, 3),
            "verdict": (
                "censored" if self.censored
                else ("equivalent" if self.equivalent else "inequivalent")
            ),
            "censored": self.censored,
        }

    def to_json(self) -> str:
        return json.dumps(self.report())


class _BudgetedSolver:
    """Incremental solver with wall-clock-bounded solve calls."""

    def __init__(self, name: str, clauses, deadline: float | None):
        self.s = Solver(name=name, bootstrap_with=clauses)
        self.deadline = deadline
        try:
            self.s.conf_budget(1)
            self._limited = True
        except NotImplementedError:
            self._limited = False

    def solve(self):
        """True/False, or None once the deadline passes."""
        if self.deadline is None or not self._limited:
            if self.deadline is not None and time.monotonic() > self.deadline:
                return None
            return self.s.solve()
        while True:
            if time.monotonic() > self.deadline:
                return None
            self.s.conf_budget(_CONF_BUDGET)
            res = self.s.solve_limited(expect_interrupt=False)
            if res is not None:
                return res

    def add(self, clauses):
        self.s.append_formula(clauses)

    def model(self):
        return self.s.get_model()

    def delete(self):
        self.s.delete()


def attack(
    topo: Topology,
    oracle,
    timeout: float | None = None,
    solver: str = DEFAULT_SOLVER,
    include_sbox: bool = False,
    verify_samples: int = 100_000,
    verify_seed: int = 1,
    on_dip=None,
) -> AttackTrace:
    """Run the DIP loop until key convergence or timeout.

    The timeout is sharp for solvers with a conflict-budget interface;
    otherwise it is only checked between solver calls (use
    attack_with_deadline for a hard bound with any backend).
    """
    start = time.monotonic()
    deadline = None if timeout is None else start + timeout
    n = topo.n

    pool = _VarPool()
    x_vars = pool.take(n)
    key_a = pool.take(topo.selector_count)
    key_b = pool.take(topo.selector_count)
    clauses: list = []
    out_a = _encode_switches(topo, pool, x_vars, key_a, clauses)
    out_b = _encode_switches(topo, pool, x_vars, key_b, clauses)
    if include_sbox:
        out_a = _encode_sbox(pool, out_a, clauses)
        out_b = _encode_sbox(pool, out_b, clauses)
    diffs = []
    for ya, yb in zip(out_a, out_b):
        d = pool.take(1)[0]
        clauses += [(-d, ya, yb), (-d, -ya, -yb), (d, -ya, yb), (d, ya, -yb)]
        diffs.append(d)
    clauses.append(tuple(diffs))

    miter = _BudgetedSolver(solver, clauses, deadline)
    key_solver = Solver(name=solver)
    dips: list[tuple[int, int]] = []

    def pin_copy(target, key_vars, xi, yi):
        cl: list = []
        xin = pool.take(n)
        for i, v in enumerate(xin):
            cl.append((v,) if (xi >> i) & 1 else (-v,))
        yv = _encode_switches(topo, pool, xin, key_vars, cl)
        if include_sbox:
            yv = _encode_sbox(pool, yv, cl)
        for i, v in enumerate(yv):
            cl.append((v,) if (yi >> i) & 1 else (-v,))
        target.add(cl) if isinstance(target, _BudgetedSolver) else target.append_formula(cl)

    censored = False
    while True:
        res = miter.solve()
        if res is None:
            censored = True
            break
        if not res:
            break
        model = miter.model()
        xi = 0
        for i, v in enumerate(x_vars):
            if model[v - 1] > 0:
                xi |= 1 << i
        yi = oracle(xi)
        dips.append((xi, yi))
        if on_dip is not None:
            on_dip(xi, yi)
        pin_copy(miter, key_a, xi, yi)
        pin_copy(miter, key_b, xi, yi)
        pin_copy(key_solver, key_a, xi, yi)

    trace = AttackTrace(
        n=n, kind=topo.kind.value, m=topo.m,
        iterations=len(dips), seconds=time.monotonic() - start,
        censored=censored, dips=dips,
    )
    if not censored:
        assert key_solver.solve(), "no key consistent with recorded DIPs"
        model = key_solver.get_model()
        bits = 0
        for i, v in enumerate(key_a):
            if v - 1 < len(model) and model[v - 1] > 0:
                bits |= 1 << i
        trace.recovered = Trn(bits, topo.selector_count)
        trace.equivalent = _verify(topo, oracle, trace.recovered, include_sbox,
                                   verify_samples, verify_seed)
        trace.seconds = time.monotonic() - start
    miter.delete()
    key_solver.delete()
    return trace


def _verify(topo, oracle, recovered, include_sbox, samples, seed) -> bool:
    candidate = make_oracle(topo, recovered, include_sbox)
    if topo.n <= 16:
        return all(candidate(x) == oracle(x) for x in range(1 << topo.n))
    rnd = random.Random(seed)
    return all(
        (lambda x: candidate(x) == oracle(x))(rnd.getrandbits(topo.n))
        for _ in range(samples)
    )


def consistent_with_dips(topo: Topology, trn: Trn, dips) -> bool:
    """Soundness check: the key reproduces every recorded pair."""
    return all(apply_forward(topo, trn, x) == y for x, y in dips)


def _deadline_worker(queue, n, kind, m, hidden_bits, solver, include_sbox):
    topo = build_topology(n, kind, m)
    hidden = Trn(hidden_bits, topo.selector_count)
    trace = attack(
        topo, make_oracle(topo, hidden, include_sbox),
        solver=solver, include_sbox=include_sbox,
        on_dip=lambda x, y: queue.put(("dip", x, y)),
    )
    queue.put(("done", {
        "iterations": trace.iterations,
        "seconds": trace.seconds,
        "recovered": trace.recovered.bits if trace.recovered else None,
        "equivalent": trace.equivalent,
    }))


def attack_with_deadline(
    topo: Topology,
    hidden: Trn,
    timeout: float,
    solver: str = DEFAULT_SOLVER,
    include_sbox: bool = False,
) -> AttackTrace:
    """Attack in a child process, killed hard at the deadline.

    Works with any solver backend (including those without a conflict
    budget).  A killed run yields a censored trace carrying the DIPs
    streamed out before the deadline.
    """
    import multiprocessing as mp

    start = time.monotonic()
    ctx = mp.get_context("fork")
    queue = ctx.Queue()
    proc = ctx.Process(
        target=_deadline_worker,
        args=(queue, topo.n, topo.kind, topo.m, hidden.bits, solver, include_sbox),
    )
    proc.start()
    deadline = start + timeout
    dips: list[tuple[int, int]] = []
    done: dict | None = None
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            break
        try:
            msg = queue.get(timeout=min(remaining, 0.5))
        except Exception:
            if not proc.is_alive():
                break
            continue
        if msg[0] == "dip":
            dips.append((msg[1], msg[2]))
        else:
            done = msg[1]
            break
    if done is None:
        proc.terminate()
    proc.join()
    queue.close()
    if done is None:
        return AttackTrace(
            n=topo.n, kind=topo.kind.value, m=topo.m,
            iterations=len(dips), seconds=time.monotonic() - start,
            censored=True, dips=dips,
        )
    recovered = (
        Trn(done["recovered"], topo.selector_count)
        if done["recovered"] is not None else None
    )
    return AttackTrace(
        n=topo.n, kind=topo.kind.value, m=topo.m,
        iterations=done["iterations"], seconds=done["seconds"],
        censored=False, dips=dips, recovered=recovered,
        equivalent=done["equivalent"],
    )


@dataclass
class SafeBound:
    n_estimate: int
    censored: bool
    traces: list[AttackTrace]

    def report(self) -> dict:
        return {
            "n_estimate": self.n_estimate,
            "censored": self.censored,
            "trials": [t.report() for t in self.traces],
        }


def derive_safe_bound(
    topo: Topology,
    trials: int = 5,
    timeout: float | None = None,
    solver: str = DEFAULT_SOLVER,
    seed: int = 1,
    hard_timeout: bool = False,
) -> SafeBound:
    """Empirical re-key bound: max DIPs over independent hidden keys.

    If every trial times out the estimate is a censored lower bound
    (the most DIPs any run managed to extract).  hard_timeout enforces
    the deadline by process kill (needed for budget-less solvers).
    """
    if trials < 3:
        raise ValueError("need at least 3 trials for a bound estimate")
    rnd = random.Random(seed)
    traces = []
    for _ in range(trials):
        hidden = Trn(rnd.getrandbits(topo.selector_count), topo.selector_count)
        if hard_timeout and timeout is not None:
            traces.append(attack_with_deadline(topo, hidden, timeout, solver))
        else:
            traces.append(attack(topo, make_oracle(topo, hidden), timeout, solver))
    return SafeBound(
        n_estimate=max(t.iterations for t in traces),
        censored=all(t.censored for t in traces),
        traces=traces,
    )
