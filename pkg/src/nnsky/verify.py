"""Randomized cross-checking of both engines against the brute-force oracle."""

import tempfile
from dataclasses import dataclass, field

from .bench import Workload, build_instance, generate, run_engine
from .errors import UsageError
from .oracle import oracle_attrs, oracle_skyline


@dataclass
class TrialReport:
    seed: int
    ok: bool
    skyline_size: int
    diffs: list = field(default_factory=list)  # human-readable mismatch lines


def verify_trial(workload: Workload, tol=1e-9, dominance=None,
                 workdir=None) -> TrialReport:
    """Run bbs, n2s2 and the oracle on one random instance and diff them."""
    data_points, query_sets = generate(workload)
    attrs = oracle_attrs(data_points, query_sets)
    expected_ids = oracle_skyline(attrs, dominance=dominance)
    diffs = []
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        data_tree, query_trees, stores = build_instance(data_points, query_sets, tmp)
        try:
            for engine in ("bbs", "n2s2"):
                result = run_engine(engine, data_tree, query_trees)
                got_ids = {p.id for p, _ in result.entries}
                if got_ids != expected_ids:
                    missing = sorted(expected_ids - got_ids)
                    extra = sorted(got_ids - expected_ids)
                    first = (missing or extra)[0]
                    diffs.append(
                        f"{engine}: id set mismatch, first differing id {first} "
                        f"(missing={missing[:5]}, extra={extra[:5]})"
                    )
                    continue
                for p, got in result.entries:
                    want = attrs[p.id]
                    if any(abs(a - b) > tol for a, b in zip(got, want)):
                        diffs.append(
                            f"{engine}: attrs of id {p.id} off: {got} vs {want}"
                        )
                        break
        finally:
            for s in stores:
                s.close()
    return TrialReport(seed=workload.seed, ok=not diffs,
                       skyline_size=len(expected_ids), diffs=diffs)


def verify_trials(seed=0, n=2000, m=2, q=1000, trials=50, tol=1e-9,
                  dominance=None, workdir=None, report=None):
    """Run ``trials`` independent instances with seeds seed..seed+trials-1."""
    if trials < 1:
        raise UsageError("trials must be at least 1")
    out = []
    for t in range(trials):
        w = Workload(seed=seed + t, n_data=n, m=m, n_query_per_set=q)
        r = verify_trial(w, tol=tol, dominance=dominance, workdir=workdir)
        out.append(r)
        if report is not None:
            report(r)
    return out
