"""Frozen paired t-test / Student-t tail values from scipy (test oracle)."""
from scipy import stats

samples = [
    ([1.0, 2.0, 3.0, 4.0, 5.0], [1.2, 1.9, 3.4, 4.1, 5.6]),
    ([3.46, 3.47, 3.45, 3.48, 3.46, 3.44], [3.55, 3.56, 3.55, 3.57, 3.54, 3.56]),
    ([0.5, 0.1, -0.3, 0.8], [0.4, 0.3, -0.1, 0.2]),
]
for a, b in samples:
    r = stats.ttest_rel(a, b)
    print(f"{r.statistic!r} {r.pvalue!r}")
for t, dof in [(0.5, 1), (1.0, 3), (2.0, 10), (2.5, 19), (4.0, 199), (0.1, 50), (10.0, 5)]:
    print(f"t={t} dof={dof} two_sided={2*stats.t.sf(t, dof)!r}")
