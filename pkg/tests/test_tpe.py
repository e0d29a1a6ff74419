"""Sampler behavior: determinism, safety, and density arithmetic.

The density oracle here recomputes the good/bad split and both Parzen
mixtures from scratch with math.erf, sharing no code with the module under
test beyond the domain types.
"""

import math
import random
import statistics

import pytest

from kwsnas.archspec import (
    ConvLayerSpec,
    NetworkArch,
    ParamDomain,
    ParamId,
    SearchSpace,
    TensorShape,
    derive_space,
    freeze_param,
)
from kwsnas import tpe
from kwsnas.tpe import InsufficientHistoryError, Observation, TpeState


def _phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def oracle_split(state):
    obs = state.observations
    n_good = max(1, math.ceil(state.gamma * len(obs)))
    order = sorted(range(len(obs)), key=lambda i: (-obs[i].objective, i))
    chosen = set(order[:n_good])
    good = [obs[i] for i in range(len(obs)) if i in chosen]
    bad = [obs[i] for i in range(len(obs)) if i not in chosen]
    return good, bad


def oracle_int_pdf(dom, values, x):
    m = dom.cardinality()
    idx = (int(x) - dom.lower) // dom.step
    rows = []
    if values:
        sigma = max(1.0, (m - 1) / max(1.0, math.sqrt(len(values))))
        for v in values:
            center = (int(v) - dom.lower) // dom.step
            probs = [
                _phi((j + 0.5 - center) / sigma) - _phi((j - 0.5 - center) / sigma)
                for j in range(m)
            ]
            z = sum(probs)
            rows.append([p / z for p in probs])
    rows.append([1.0 / m] * m)
    return sum(r[idx] for r in rows) / len(rows)


def oracle_log_pdf(dom, values, x):
    lo, hi = math.log(float(dom.lower)), math.log(float(dom.upper))
    span = hi - lo
    if span <= 0:
        return 1.0
    z = math.log(float(x))
    total = 1.0 / span
    if values:
        sigma = max(span / max(1.0, math.sqrt(len(values))), span * 1e-3)
        for v in values:
            center = math.log(float(v))
            a = _phi((lo - center) / sigma)
            b = _phi((hi - center) / sigma)
            t = (z - center) / sigma
            total += math.exp(-0.5 * t * t) / (sigma * math.sqrt(2 * math.pi)) / (b - a)
    return total / (len(values) + 1)


def oracle_density_ratio(state, space, assignment):
    good, bad = oracle_split(state)
    ratio = 1.0
    for dom in sorted(space.domains, key=lambda d: d.id.sort_key()):
        if dom.frozen is not None:
            continue
        x = assignment[dom.id]
        gvals = [o.assignment[dom.id] for o in good]
        bvals = [o.assignment[dom.id] for o in bad]
        pdf = oracle_log_pdf if dom.is_continuous else oracle_int_pdf
        ratio *= pdf(dom, gvals, x) / pdf(dom, bvals, x)
    return ratio


def single_m_space(upper=100):
    seed = NetworkArch(
        input=TensorShape(c=1, h=8, w=8),
        layers=(ConvLayerSpec(kh=1, kw=1, m=upper),),
    )
    space = derive_space(seed)
    space = freeze_param(space, ParamId("kh", 0), 1)
    space = freeze_param(space, ParamId("kw", 0), 1)
    return space


def random_space(rng):
    layers = tuple(
        ConvLayerSpec(kh=rng.randint(1, 5), kw=rng.randint(1, 5), m=rng.randint(2, 24))
        for _ in range(rng.randint(1, 3))
    )
    seed = NetworkArch(input=TensorShape(c=1, h=12, w=12), layers=layers)
    space = derive_space(seed)
    if rng.random() < 0.5:
        lr_dom = ParamDomain(ParamId("lr"), 1e-5, 1e-1)
        space = SearchSpace(
            seed=space.seed,
            domains=space.domains + (lr_dom,),
            solver_defaults=space.solver_defaults,
        )
    if rng.random() < 0.5:
        dom = space.domains[rng.randrange(len(space.domains))]
        if not dom.is_continuous:
            space = freeze_param(space, dom.id, rng.randint(dom.lower, dom.upper))
    return space


def random_assignment(rng, space):
    out = {}
    for dom in space.domains:
        if dom.frozen is not None:
            out[dom.id] = dom.frozen
        elif dom.is_continuous:
            lo, hi = math.log(dom.lower), math.log(dom.upper)
            out[dom.id] = math.exp(rng.uniform(lo, hi))
        else:
            out[dom.id] = rng.randint(dom.lower, dom.upper)
    return out


def grown(state, space, objective, n, start=0):
    for i in range(start, start + n):
        a = tpe.suggest(state, space, draw=i)
        state = tpe.observe(state, Observation(a, objective(a)), space)
    return state


# ---------------------------------------------------------------------------
# observe


def test_observe_appends_and_preserves_order():
    state = TpeState()
    for k in range(300):
        state = tpe.observe(state, Observation({ParamId("m", 0): k % 7 + 1}, k / 300))
    assert len(state.observations) == 300
    assert [o.objective for o in state.observations[:3]] == [0.0, 1 / 300, 2 / 300]


def test_observe_keeps_duplicates():
    obs = Observation({ParamId("m", 0): 3}, 0.5)
    state = tpe.observe(tpe.observe(TpeState(), obs), obs)
    assert len(state.observations) == 2


def test_observe_rejects_nonfinite_objective():
    with pytest.raises(ValueError):
        tpe.observe(TpeState(), Observation({ParamId("m", 0): 1}, float("nan")))


def test_observe_validates_against_space():
    space = single_m_space(10)
    with pytest.raises(Exception):
        tpe.observe(TpeState(), Observation({ParamId("m", 0): 999}, 0.5), space)


# ---------------------------------------------------------------------------
# suggest basics


def test_suggest_deterministic_sequence():
    space = single_m_space()
    obj = lambda a: a[ParamId("m", 0)] / 100

    def seq():
        state = TpeState(rng_seed=11, n_startup=5)
        out = []
        for i in range(30):
            a = tpe.suggest(state, space, draw=i)
            out.append(a[ParamId("m", 0)])
            state = tpe.observe(state, Observation(a, obj(a)), space)
        return out

    assert seq() == seq()


def test_startup_history_independent():
    space = single_m_space()
    rng = random.Random(5)
    obs = [Observation(random_assignment(rng, space), rng.random()) for _ in range(12)]
    base = TpeState(rng_seed=3, n_startup=20, observations=tuple(obs))
    shuffled = list(obs)
    rng.shuffle(shuffled)
    perm = TpeState(rng_seed=3, n_startup=20, observations=tuple(shuffled))
    empty = TpeState(rng_seed=3, n_startup=20)
    for draw in range(6):
        a = tpe.suggest(base, space, draw=draw)
        assert a == tpe.suggest(perm, space, draw=draw)
        assert a == tpe.suggest(empty, space, draw=draw)


def test_forced_single_cardinality_domain():
    space = single_m_space(upper=5)
    for dom in space.domains:
        if dom.id == ParamId("m", 0):
            space = freeze_param(space, dom.id, 4)
    # everything frozen: the one remaining point comes back
    a = tpe.suggest(TpeState(rng_seed=1), space, draw=0)
    assert a == {ParamId("kh", 0): 1, ParamId("kw", 0): 1, ParamId("m", 0): 4}


def test_suggestions_respect_bounds_and_freezes():
    rng = random.Random(77)
    total = 0
    for _ in range(60):
        space = random_space(rng)
        state = TpeState(rng_seed=rng.getrandbits(32), n_startup=6)
        obj = lambda a: rng.random()
        state = grown(state, space, obj, 10)
        for draw in range(10, 25):
            a = tpe.suggest(state, space, draw=draw)
            total += 1
            for dom in space.domains:
                v = a[dom.id]
                if dom.frozen is not None:
                    assert v == dom.frozen
                elif dom.is_continuous:
                    assert dom.lower <= v <= dom.upper
                else:
                    assert dom.lower <= v <= dom.upper
                    assert (v - dom.lower) % dom.step == 0
    assert total == 900


def test_model_phase_suggestions_respect_freeze():
    space = single_m_space()
    state = TpeState(rng_seed=9, n_startup=5)
    state = grown(state, space, lambda a: a[ParamId("m", 0)] / 100, 20)
    frozen = freeze_param(space, ParamId("m", 0), 42)
    for draw in range(100):
        assert tpe.suggest(state, frozen, draw=draw)[ParamId("m", 0)] == 42


# ---------------------------------------------------------------------------
# density arithmetic


def test_suggest_returns_argmax_of_density_ratio():
    space = single_m_space()
    pid = ParamId("m", 0)
    state = TpeState(rng_seed=123, n_startup=20)
    state = grown(state, space, lambda a: 1.0 - abs(a[pid] - 60) / 100, 50)
    best, scored = tpe.suggest(state, space, draw=50, return_candidates=True)
    assert len(scored) == state.n_candidates
    oracle_scores = [oracle_density_ratio(state, space, c) for c, _ in scored]
    for (_, reported), recomputed in zip(scored, oracle_scores):
        assert reported == pytest.approx(recomputed, rel=1e-9)
    top = max(oracle_scores)
    first_best = next(c for (c, _), s in zip(scored, oracle_scores) if s == top)
    assert best == first_best


def test_density_ratio_matches_oracle_on_random_states():
    rng = random.Random(20260821)
    for _ in range(25):
        space = random_space(rng)
        n_startup = rng.randint(4, 10)
        state = TpeState(rng_seed=rng.getrandbits(32), n_startup=n_startup)
        for _k in range(rng.randint(n_startup, 40)):
            a = random_assignment(rng, space)
            # quantized objectives force boundary ties through the split rule
            state = tpe.observe(state, Observation(a, rng.randint(0, 20) / 20), space)
        probe = random_assignment(rng, space)
        got = tpe.density_ratio(state, space, probe)
        want = oracle_density_ratio(state, space, probe)
        assert got == pytest.approx(want, rel=1e-9)


def test_density_ratio_requires_history():
    space = single_m_space()
    state = TpeState(rng_seed=1, n_startup=20)
    with pytest.raises(InsufficientHistoryError):
        tpe.density_ratio(state, space, {ParamId("m", 0): 5})


def test_identical_good_and_bad_sets_give_unit_ratio():
    space = single_m_space(10)
    pid = ParamId("m", 0)
    a = {pid: 3}
    b = {pid: 8}
    # objectives all equal, gamma 0.5 over 4 obs: good = first two = {a, b},
    # bad = last two = {a, b}; same multiset, same size, same bandwidth
    state = TpeState(rng_seed=0, gamma=0.5, n_startup=4)
    for assignment in (a, b, a, b):
        state = tpe.observe(state, Observation(assignment, 0.5), space)
    for probe in range(1, 11):
        assert tpe.density_ratio(state, space, {pid: probe}) == pytest.approx(1.0, rel=1e-12)


def test_ratio_peaks_at_good_cluster():
    space = single_m_space()
    pid = ParamId("m", 0)
    state = TpeState(rng_seed=0, gamma=0.25, n_startup=20)
    for _ in range(10):
        state = tpe.observe(state, Observation({pid: 20}, 0.9), space)
    for _ in range(30):
        state = tpe.observe(state, Observation({pid: 80}, 0.1), space)
    assert tpe.density_ratio(state, space, {pid: 20}) > tpe.density_ratio(state, space, {pid: 80})


def test_density_ratio_invariant_under_reordering():
    rng = random.Random(40)
    space = random_space(rng)
    state_obs = []
    objectives = rng.sample(range(1000), 30)  # strictly distinct
    for y in objectives:
        state_obs.append(Observation(random_assignment(rng, space), y / 1000))
    probe = random_assignment(rng, space)
    base = TpeState(rng_seed=1, n_startup=10, observations=tuple(state_obs))
    want = tpe.density_ratio(base, space, probe)
    for _ in range(5):
        rng.shuffle(state_obs)
        perm = TpeState(rng_seed=1, n_startup=10, observations=tuple(state_obs))
        assert tpe.density_ratio(perm, space, probe) == pytest.approx(want, rel=1e-9)


# ---------------------------------------------------------------------------
# optimization sanity


def test_tpe_beats_seeded_random_search():
    seed = NetworkArch(
        input=TensorShape(c=1, h=16, w=16),
        layers=(ConvLayerSpec(kh=5, kw=5, m=20), ConvLayerSpec(kh=5, kw=5, m=20)),
    )
    space = derive_space(seed)
    centers = {"kh0": 3, "kw0": 4, "m0": 15, "kh1": 2, "kw1": 5, "m1": 8}

    def objective(a):
        miss = sum(
            abs(a[d.id] - centers[d.id.key()]) / (d.upper - d.lower)
            for d in space.domains
        )
        return 1.0 - miss / len(space.domains)

    def best_after(seed_k, n_startup):
        state = TpeState(rng_seed=seed_k, n_startup=n_startup)
        best = -1.0
        for i in range(200):
            a = tpe.suggest(state, space, draw=i)
            y = objective(a)
            state = tpe.observe(state, Observation(a, y), space)
            best = max(best, y)
        return best

    tpe_runs = [best_after(k, 20) for k in range(10)]
    random_runs = [best_after(k, 10**9) for k in range(10)]  # startup forever = uniform
    assert statistics.median(tpe_runs) > statistics.median(random_runs)
