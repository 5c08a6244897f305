"""Second-neighbor range queries over a torus Poisson sample.

Each round, every vertex lets each pair of its current neighbors test their
mutual distance against a shrinking radius; in-range pairs survive with an
acceptance probability that cancels the geometry of ball overlaps, so every
vertex's neighborhood stays a uniform-rate sample of the ball around it.
The radii and success rates follow a deterministic schedule obtained by
solving the update equation round by round, and the whole process costs
O(n K^2 log n) distance evaluations.
"""

import math
from dataclasses import dataclass

import numpy as np
from itertools import combinations

from .errors import InputError, ScheduleExhausted
from .spaces import TorusSpace, torus_poisson, wrapped_deltas

__all__ = [
    "TwoNrqParams",
    "derive_params",
    "g_min_overlap",
    "nu_overlap",
    "solve_next_radius",
    "Schedule",
    "compute_schedule",
    "schedule_csv",
    "TwoNrqState",
    "init_e0",
    "ideal_state",
    "range_query_round",
    "SamplingReport",
    "verify_sampling_property",
    "TwoNrqResult",
    "run_2nrq",
    "tau_bound",
    "work_bound",
]

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class TwoNrqParams:
    """Scaling constants for a run: dimensions, rates, and their envelopes.

    ``gamma < r_t/r_{t-1} <= gamma_star`` once the explicit-formula phase
    (of length at most ``t_prime_bound``) ends; ``alpha`` caps the success
    rate and ``beta = -log(1-alpha)/alpha`` is its convexity constant.
    """

    n: float
    K: int
    d: int
    alpha: float
    beta: float
    gamma: float
    gamma_star: float
    t_prime_bound: float


def derive_params(n, K, d, alpha):
    """Derive (beta, gamma, gamma_star, t' bound) from (n, K, d, alpha)."""
    n = float(n)
    K = int(K)
    d = int(d)
    if d < 1 or n < 1:
        raise InputError("need d >= 1 and n >= 1")
    if K <= 2 ** d:
        raise InputError(f"K must exceed 2^d: got K={K}, 2^d={2 ** d} (dimension too high for K)")
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    beta = -math.log1p(-alpha) / alpha
    if not 1.0 < beta < K / 2 ** d:
        raise InputError(
            f"beta={beta:.6f} must lie in (1, K/2^d)={K / 2 ** d:.6f}; lower alpha"
        )
    gamma = 1.0 - math.sqrt(1.0 - 2.0 / K ** (1.0 / d))
    gamma_star = 1.0 - math.sqrt(1.0 - 2.0 * (beta / K) ** (1.0 / d))
    log2_kb = math.log2(K / beta)
    t_prime_bound = math.log2(log2_kb / (log2_kb - d))
    return TwoNrqParams(n, K, d, alpha, beta, gamma, gamma_star, t_prime_bound)


def g_min_overlap(s, r, d):
    """Guaranteed ball-overlap volume ratio: min{1, (2r - s)^d}.

    The smallest volume of the intersection of two radius-r sup-norm balls
    whose centers are at most s apart; zero once s >= 2r.
    """
    if d < 1:
        raise InputError("need d >= 1")
    if s < 0 or r <= 0:
        raise InputError("need s >= 0 and r > 0")
    span = 2.0 * r - s
    if span <= 0:
        return 0.0
    return min(1.0, span ** d)


def nu_overlap(space, v, vp, r):
    """Exact intersection volume of the radius-r balls around v and vp.

    Per coordinate, two wrapped intervals of length 2r at offset t overlap
    in min(2, max(0, 2r - t) + max(0, 2r + t - 2)); the volume is the
    product.
    """
    if not isinstance(space, TorusSpace):
        raise InputError("nu_overlap is defined on a torus space")
    v = np.asarray(v, dtype=np.float64)
    vp = np.asarray(vp, dtype=np.float64)
    if v.shape != (space.d,) or vp.shape != (space.d,):
        raise InputError("points must have the space's dimension")
    t = wrapped_deltas(v - vp)
    per_axis = np.minimum(2.0, np.maximum(0.0, 2 * r - t) + np.maximum(0.0, 2 * r + t - 2.0))
    return float(per_axis.prod())


def _nu_many(deltas, r):
    per_axis = np.minimum(
        2.0, np.maximum(0.0, 2 * r - deltas) + np.maximum(0.0, 2 * r + deltas - 2.0)
    )
    return per_axis.prod(axis=1)


def solve_next_radius(params, r_prev):
    """The unique next radius, via the explicit form when it applies.

    When ``r_prev > 1/2`` the closed form is tried first and kept if the
    solution satisfies ``2 r_prev - r >= 1``; otherwise the implicit update
    equation is bisected over (max((K/(n alpha))^(1/d), gamma r_prev),
    r_prev) to 1e-12.  Raises ``ScheduleExhausted`` when no root brackets,
    which is the normal termination condition.
    """
    n, K, d, alpha = params.n, params.K, params.d, params.alpha
    if r_prev > 1.0 or r_prev ** d < K / (n * alpha):
        raise InputError("r_prev must lie in the admissible range")
    theta_prev = K / (n * r_prev ** d)
    if r_prev > 0.5:
        mu = theta_prev ** 2 * n / 2 ** d
        r = (K / (n * -math.expm1(-mu))) ** (1.0 / d)
        if 2 * r_prev - r >= 1.0:
            return r, True

    coeff = theta_prev ** 2 * n / 2 ** d

    def gap(r):
        # accepted-proposal mean minus -log(1 - theta(r)); zero at the update
        return coeff * (2 * r_prev - r) ** d + math.log1p(-K / (n * r ** d))

    lo = max((K / (n * alpha)) ** (1.0 / d), params.gamma * r_prev)
    hi = r_prev
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0.0:
        return lo, False
    if g_lo * g_hi > 0:
        raise ScheduleExhausted("no admissible radius solves the update equation")
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if hi - lo < _BISECT_TOL:
            break
        if (g_mid < 0) == (g_lo < 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


@dataclass(frozen=True)
class Schedule:
    """Radii r_0 > ... > r_tau with coupled rates theta_t = K/(n r_t^d)."""

    params: TwoNrqParams
    radii: tuple
    rates: tuple
    formulas: tuple
    t_prime: int
    tau: int


def compute_schedule(params):
    """Iterate the radius solver from r_0 = 1 until theta would exceed alpha."""
    n, K, d, alpha = params.n, params.K, params.d, params.alpha
    radii = [1.0]
    formulas = ["init"]
    while True:
        try:
            r, used_explicit = solve_next_radius(params, radii[-1])
        except ScheduleExhausted:
            break
        if r ** d < K / (n * alpha):
            break
        radii.append(r)
        formulas.append("explicit" if used_explicit else "implicit")
    rates = tuple(K / (n * r ** d) for r in radii)
    t_prime = sum(1 for f in formulas if f == "explicit")
    # explicit steps form a prefix by the monotone switch rule
    assert all(f == "explicit" for f in formulas[1 : t_prime + 1])
    return Schedule(
        params=params,
        radii=tuple(radii),
        rates=rates,
        formulas=tuple(formulas),
        t_prime=t_prime,
        tau=len(radii) - 1,
    )


def schedule_csv(schedule):
    lines = ["t,r_t,theta_t,formula_used"]
    for t, (r, th, f) in enumerate(zip(schedule.radii, schedule.rates, schedule.formulas)):
        lines.append(f"{t},{r:.12f},{th:.12e},{f}")
    return "\n".join(lines) + "\n"


def tau_bound(params, n=None):
    """Round-count bound t' bound + log(n alpha / K) / (d log(1/gamma_star))."""
    n = params.n if n is None else n
    return params.t_prime_bound + math.log(n * params.alpha / params.K) / (
        params.d * math.log(1.0 / params.gamma_star)
    )


def work_bound(params, t_prime, n=None):
    """Distance-evaluation scale n K^2 (t' + log(n alpha/K)/(d log(1/gamma_star)))."""
    n = params.n if n is None else n
    rounds = t_prime + math.log(n * params.alpha / params.K) / (
        params.d * math.log(1.0 / params.gamma_star)
    )
    return n * params.K ** 2 * rounds


# ---------------------------------------------------------------------------
# The simulated graph process

class TwoNrqState:
    """Undirected edge set over a torus sample at some round, plus a work meter."""

    def __init__(self, space, edges, t=0, distance_evals=0):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (
            edges.min() < 0 or edges.max() >= space.n or (edges[:, 0] == edges[:, 1]).any()
        ):
            raise InputError("edges must join distinct in-range vertices")
        edges = np.unique(np.sort(edges, axis=1), axis=0) if edges.size else edges
        self.space = space
        self.edges = edges
        self.t = int(t)
        self.distance_evals = int(distance_evals)

    @property
    def edge_count(self):
        return self.edges.shape[0]

    def degrees(self):
        deg = np.zeros(self.space.n, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def edge_lengths(self):
        if not self.edges.size:
            return np.zeros(0)
        p = self.space.points
        return wrapped_deltas(p[self.edges[:, 0]] - p[self.edges[:, 1]]).max(axis=1)

    def adjacency(self):
        """CSR-style (indptr, neighbors) view of the undirected edge set."""
        m = self.space.n
        if not self.edges.size:
            return np.zeros(m + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
        both = np.concatenate([self.edges, self.edges[:, ::-1]])
        both = both[np.argsort(both[:, 0], kind="stable")]
        counts = np.bincount(both[:, 0], minlength=m)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return indptr, both[:, 1]


def init_e0(space, K, n_mean, seed):
    """Round-0 edges: rate-K/n_mean sample of the complete graph.

    The count is Binomial(C(m, 2), K/n_mean) and the edges a uniform subset
    of that size, which matches independent per-pair coins in law without a
    quadratic pair scan.
    """
    m = space.n
    if m < 2:
        raise InputError("need at least two vertices")
    rng = np.random.default_rng(seed)
    total = m * (m - 1) // 2
    rate = min(1.0, K / float(n_mean))
    count = int(rng.binomial(total, rate))
    if count == 0:
        return TwoNrqState(space, np.zeros((0, 2), dtype=np.int64), t=0)
    if count > total // 4:
        iu = np.triu_indices(m, 1)
        keys = np.stack([iu[0], iu[1]], axis=1)
        pick = rng.permutation(total)[:count]
        return TwoNrqState(space, keys[pick], t=0)
    # draw i.i.d. pairs until enough distinct ones exist, then thin uniformly;
    # symmetric over pairs, so the final set is uniform of its size
    chosen = np.zeros(0, dtype=np.int64)
    while chosen.size < count:
        batch = max(4 * count, 1024)
        a = rng.integers(0, m, size=batch)
        b = rng.integers(0, m, size=batch)
        ok = a != b
        lo = np.minimum(a[ok], b[ok]).astype(np.int64)
        hi = np.maximum(a[ok], b[ok]).astype(np.int64)
        chosen = np.unique(np.concatenate([chosen, lo * m + hi]))
    pick = rng.choice(chosen.size, size=count, replace=False)
    keys = chosen[pick]
    edges = np.stack([keys // m, keys % m], axis=1)
    return TwoNrqState(space, edges, t=0)


def ideal_state(space, r, theta, t, seed, chunk=256):
    """A state satisfying the sampling hypothesis exactly: independent
    rate-theta coins over every vertex pair within distance r.

    Quadratic in the vertex count; intended as the conditioned-input
    diagnostic, not as part of the algorithm.
    """
    m = space.n
    rng = np.random.default_rng(seed)
    pts = space.points
    rows = []
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        block = wrapped_deltas(pts[start:stop, None, :] - pts[None, :, :]).max(axis=2)
        for local, i in enumerate(range(start, stop)):
            near = np.flatnonzero(block[local, i + 1 :] <= r) + i + 1
            if near.size:
                keep = near[rng.random(near.size) < theta]
                if keep.size:
                    rows.append(np.stack([np.full(keep.size, i, dtype=np.int64), keep], axis=1))
    edges = np.concatenate(rows) if rows else np.zeros((0, 2), dtype=np.int64)
    return TwoNrqState(space, edges, t=t)


_pair_templates = {}


def _hub_pairs(state):
    """All (neighbor, neighbor) pairs proposed by degree >= 2 vertices."""
    indptr, nbrs = state.adjacency()
    deg = np.diff(indptr)
    groups = []
    for g in np.unique(deg):
        if g < 2:
            continue
        hubs = np.flatnonzero(deg == g)
        tmpl = _pair_templates.get(int(g))
        if tmpl is None:
            tmpl = np.array(list(combinations(range(int(g)), 2)))
            _pair_templates[int(g)] = tmpl
        block = nbrs[indptr[hubs][:, None] + np.arange(g)[None, :]]
        groups.append(block[:, tmpl].reshape(-1, 2))
    if not groups:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(groups)


def range_query_round(state, r_t, r_prev, g_value, seed, return_accept_counts=False):
    """One range-query update: E_t built fresh from E_{t-1}'s neighbor pairs.

    Every vertex of degree >= 2 proposes each unordered pair of its
    neighbors; each proposal costs one distance evaluation, is dropped
    beyond ``r_t``, and otherwise succeeds independently with probability
    ``g_value / nu`` where nu is the exact overlap volume of the two
    ``r_prev`` balls.  Successes are deduplicated into the new edge set;
    old edges are not carried over.
    """
    if not 0 < r_t < r_prev <= 1.0:
        raise InputError("need 0 < r_t < r_prev <= 1")
    rng = np.random.default_rng(seed)
    pts = state.space.points
    proposals = _hub_pairs(state)
    evals = proposals.shape[0]
    if evals:
        deltas = wrapped_deltas(pts[proposals[:, 0]] - pts[proposals[:, 1]])
        in_range = deltas.max(axis=1) <= r_t
        prop = proposals[in_range]
        nu = _nu_many(deltas[in_range], r_prev)
        f = g_value / nu
        if f.size and f.max() > 1.0 + 1e-9:
            raise RuntimeError(
                f"acceptance rate {f.max():.6f} exceeds 1: overlap volume fell below g"
            )
        accepted = prop[rng.random(f.size) < f]
    else:
        accepted = np.zeros((0, 2), dtype=np.int64)
    new_state = TwoNrqState(
        state.space,
        accepted,
        t=state.t + 1,
        distance_evals=state.distance_evals + evals,
    )
    if return_accept_counts:
        counts = {}
        m = state.space.n
        for a, b in np.sort(accepted, axis=1):
            counts[(int(a), int(b))] = counts.get((int(a), int(b)), 0) + 1
        return new_state, counts
    return new_state


@dataclass
class SamplingReport:
    """Measured sampling-property statistics for one round."""

    t: int
    r_t: float
    theta_t: float
    sampled: int
    out_of_range_neighbors: int
    rate_mean: float
    rate_se: float
    rate_z: float
    deg_mean: float
    deg_se: float
    ks_stat: float
    ks_pvalue: float

    @property
    def range_ok(self):
        return self.out_of_range_neighbors == 0

    @property
    def rate_ok(self):
        return abs(self.rate_z) <= 3.0

    @property
    def ks_ok(self):
        return not np.isfinite(self.ks_pvalue) or self.ks_pvalue >= 0.01

    def deg_z(self, K):
        return (self.deg_mean - K) / self.deg_se if self.deg_se > 0 else math.inf

    def to_json_dict(self):
        return {
            "t": self.t,
            "r_t": self.r_t,
            "theta_t": self.theta_t,
            "sampled": self.sampled,
            "out_of_range_neighbors": self.out_of_range_neighbors,
            "rate_mean": self.rate_mean,
            "rate_se": self.rate_se,
            "rate_z": self.rate_z,
            "deg_mean": self.deg_mean,
            "deg_se": self.deg_se,
            "ks_stat": self.ks_stat,
            "ks_pvalue": self.ks_pvalue,
        }


def verify_sampling_property(state, r_t, theta_t, sample_size, seed=0, ks_cap_per_vertex=200):
    """Measure whether neighborhoods look like rate-theta_t ball samples.

    Checks, over sampled vertices: (a) no neighbor lies beyond r_t; (b) the
    mean of deg(v)/|ball population| versus theta_t in standard errors; and
    (c) a two-sided two-sample KS test at the h-transformed radial statistic
    between neighbor distances and non-neighbor in-ball distances.
    """
    from scipy import stats

    m = state.space.n
    d = state.space.d
    pts = state.space.points
    rng = np.random.default_rng(seed)
    sample = rng.choice(m, size=min(sample_size, m), replace=False)
    indptr, nbrs = state.adjacency()
    deg = np.diff(indptr)

    rates = np.empty(len(sample))
    out_of_range = 0
    nbr_radial = []
    pop_radial = []
    chunk = 256
    for start in range(0, len(sample), chunk):
        idx = sample[start : start + chunk]
        block = wrapped_deltas(pts[idx][:, None, :] - pts[None, :, :]).max(axis=2)
        for local, v in enumerate(idx):
            row = block[local]
            in_ball = row <= r_t
            in_ball[v] = False
            q = int(in_ball.sum())
            neigh = nbrs[indptr[v] : indptr[v + 1]]
            out_of_range += int((row[neigh] > r_t).sum())
            rates[start + local] = deg[v] / q if q else np.nan
            if neigh.size:
                nbr_radial.append((row[neigh] / r_t) ** d)
            others = np.flatnonzero(in_ball)
            others = np.setdiff1d(others, neigh, assume_unique=False)
            if others.size > ks_cap_per_vertex:
                others = rng.choice(others, size=ks_cap_per_vertex, replace=False)
            if others.size:
                pop_radial.append((row[others] / r_t) ** d)

    rates = rates[np.isfinite(rates)]
    rate_mean = float(rates.mean())
    rate_se = float(rates.std(ddof=1) / math.sqrt(len(rates)))
    deg_sample = deg[sample]
    deg_mean = float(deg_sample.mean())
    deg_se = float(deg_sample.std(ddof=1) / math.sqrt(len(sample)))
    nbr_radial = np.concatenate(nbr_radial) if nbr_radial else np.zeros(0)
    pop_radial = np.concatenate(pop_radial) if pop_radial else np.zeros(0)
    if nbr_radial.size >= 5 and pop_radial.size >= 5:
        ks = stats.ks_2samp(nbr_radial, pop_radial)
        ks_stat, ks_p = float(ks.statistic), float(ks.pvalue)
    else:
        ks_stat, ks_p = math.nan, math.nan
    return SamplingReport(
        t=state.t,
        r_t=float(r_t),
        theta_t=float(theta_t),
        sampled=len(sample),
        out_of_range_neighbors=out_of_range,
        rate_mean=rate_mean,
        rate_se=rate_se,
        rate_z=(rate_mean - theta_t) / rate_se if rate_se > 0 else math.inf,
        deg_mean=deg_mean,
        deg_se=deg_se,
        ks_stat=ks_stat,
        ks_pvalue=ks_p,
    )


@dataclass
class TwoNrqResult:
    state: TwoNrqState
    schedule: Schedule
    report: dict


def run_2nrq(
    n_mean,
    K,
    d,
    alpha,
    seed,
    verify_rounds=False,
    sample_size=500,
    idealized_inputs=False,
):
    """Full pipeline: sample points, derive the schedule, run every round.

    The schedule is computed from the realized point count (the algorithm
    knows its input), not from n_mean: the update equation squares the
    previous rate each round, so even the Poisson fluctuation of the count
    would otherwise compound into a visible rate bias at desk scale.

    With ``idealized_inputs`` each round's input edge set is regenerated as
    an exact rate-theta sample of in-range pairs, isolating the one-step
    update from dependence accumulated across rounds (a diagnostic, not the
    algorithm).
    """
    root = np.random.SeedSequence(int(seed))
    space_seed, e0_seed, round_seed, verify_seed, ideal_seed = (
        int(s) for s in root.generate_state(5)
    )
    space = torus_poisson(n_mean, d, space_seed)
    m = space.n
    params = derive_params(float(m), K, d, alpha)
    schedule = compute_schedule(params)
    state = init_e0(space, K, float(m), e0_seed)
    round_seeds = [round_seed + t for t in range(schedule.tau + 1)]
    verify_seeds = [verify_seed + t for t in range(schedule.tau + 1)]
    ideal_seeds = [ideal_seed + t for t in range(schedule.tau + 1)]

    per_round = []
    reports = []
    if verify_rounds:
        rep = verify_sampling_property(
            state, schedule.radii[0], schedule.rates[0], sample_size, seed=verify_seeds[0]
        )
        reports.append(rep)
    evals = 0
    for t in range(1, schedule.tau + 1):
        r_t, r_prev = schedule.radii[t], schedule.radii[t - 1]
        g_value = g_min_overlap(r_t, r_prev, d)
        src = state
        if idealized_inputs and t > 1:
            src = ideal_state(space, r_prev, schedule.rates[t - 1], t - 1, ideal_seeds[t - 1])
            src.distance_evals = state.distance_evals
        state = range_query_round(src, r_t, r_prev, g_value, round_seeds[t - 1])
        per_round.append(
            {
                "t": t,
                "r_t": r_t,
                "theta_t": schedule.rates[t],
                "edges": state.edge_count,
                "mean_degree": float(state.degrees().mean()),
                "distance_evals": state.distance_evals - evals,
            }
        )
        evals = state.distance_evals
        if verify_rounds:
            rep = verify_sampling_property(
                state, r_t, schedule.rates[t], sample_size, seed=verify_seeds[t]
            )
            reports.append(rep)

    report = {
        "n_mean": float(n_mean),
        "realized_points": m,
        "K": K,
        "d": d,
        "alpha": alpha,
        "seed": int(seed),
        "idealized_inputs": bool(idealized_inputs),
        "tau": schedule.tau,
        "t_prime": schedule.t_prime,
        "radii": list(schedule.radii),
        "rates": list(schedule.rates),
        "distance_evals": state.distance_evals,
        "tau_bound": tau_bound(params, n=float(n_mean)),
        "work_bound": work_bound(params, schedule.t_prime, n=float(n_mean)),
        "per_round": per_round,
        "sampling_reports": [r.to_json_dict() for r in reports],
    }
    return TwoNrqResult(state=state, schedule=schedule, report=report)
