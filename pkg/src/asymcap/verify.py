"""Structural self-checks for the perturbed-codebook model.

Two families of checks.  Exact identity checks evaluate entropy and Markov
relations of the four-variable binary joint (X, U, Y, V) on a (p1, p2)
grid and must hold to near machine precision.  Sampling checks draw large
Monte Carlo samples and gate on coarse statistical thresholds.  A check
that raises is reported as failed, never skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import generate_codebooks
from .info import (
    DomainError,
    JointPmf,
    Pmf,
    binary_entropy,
    bsc,
    build_joint_uy,
    build_joint_xuyv,
    check_markov,
    conditional_entropy,
    entropy,
    mutual_information,
)
from .rng import TAG_CHANNEL, TAG_CODEBOOK, TAG_PERTURB, derive_seed, sample_pmf, sample_rows, stream

__all__ = [
    "IDENTITY_THRESHOLD",
    "TV_THRESHOLD",
    "Z_LIMIT",
    "CONTROL_THRESHOLD",
    "CheckResult",
    "VerificationReport",
    "default_grid",
    "identity_residuals",
    "corrupted_joint_violation",
    "sampled_pair_tv",
    "codebook_iid_zscores",
    "run_verification",
]

IDENTITY_THRESHOLD = 1e-10   # exact identities, residual is numerical noise
TV_THRESHOLD = 5e-3          # empirical factorization at DEFAULT_SAMPLES
Z_LIMIT = 3.0                # binomial / correlation z-score gate
# The corrupted joint passes the negative control iff it violates the exact
# Markov gate, i.e. its deviation lands above the identity threshold.
CONTROL_THRESHOLD = IDENTITY_THRESHOLD
SAMPLING_POINT = (0.1, 0.2)  # (p1, p2) used by the sampling checks
DEFAULT_GRID_STEP = 0.1
DEFAULT_SAMPLES = 1_000_000
FREQ_CODEBOOK_SHAPE = (200, 500)

# Fixed reporting order for the exact identity checks.
IDENTITY_CHECKS = (
    "markov_u_x_y",
    "markov_u_v_y",
    "markov_x_u_v",
    "markov_x_y_v",
    "rate_loss_decomposition",
    "mutual_info_balance",
    "entropy_v_given_x",
    "entropy_u_given_xv",
    "entropy_y_given_xv",
    "entropy_v_given_uy",
)


@dataclass(frozen=True)
class CheckResult:
    """One named check: observed residual against its threshold."""

    name: str
    max_residual: float
    threshold: float
    passed: bool

    def __post_init__(self):
        # Plain Python scalars keep the report JSON-serializable.
        object.__setattr__(self, "max_residual", float(self.max_residual))
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "passed", bool(self.passed))

    def to_json_dict(self) -> dict:
        return {
            "check": self.name,
            "max_residual": self.max_residual,
            "threshold": self.threshold,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class VerificationReport:
    """All check outcomes plus the configuration that produced them."""

    checks: tuple[CheckResult, ...]
    config: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "checks": [c.to_json_dict() for c in self.checks],
            "pass": self.passed,
        }


def default_grid(step: float = DEFAULT_GRID_STEP) -> np.ndarray:
    """Lattice {0, step, 2 step, ...} covering [0, 0.5]."""
    step = float(step)
    if not 0.0 < step <= 0.5:
        raise DomainError(f"grid step {step!r} outside (0, 0.5]")
    return np.linspace(0.0, 0.5, round(0.5 / step) + 1)


def identity_residuals(p1: float, p2: float) -> dict[str, float]:
    """Residuals of the exact structural identities at one (p1, p2) point.

    All identities are stated for the uniform binary input; V denotes the
    composite-noise variable X xor Z1 xor Z2.  q = p1 + p2 - 2 p1 p2 is the
    crossover of the two flips composed.
    """
    j4 = build_joint_xuyv(Pmf.uniform(2), p1, p2)  # axes (x, u, y, v)
    q = p1 + p2 - 2.0 * p1 * p2
    hq = binary_entropy(q)
    h1 = binary_entropy(p1)
    h2 = binary_entropy(p2)
    defect = h1 + h2 - hq  # common value of the three conditional entropies

    i_uy = mutual_information(j4.marginal((1, 2)))
    i_xy = mutual_information(j4.marginal((0, 2)))
    i_xy_given_u = (
        conditional_entropy(j4, (0,), (1,))
        + conditional_entropy(j4, (2,), (1,))
        - conditional_entropy(j4, (0, 2), (1,))
    )
    h_v = entropy(j4.marginal((3,)))
    h_v_uy = conditional_entropy(j4, (3,), (1, 2))

    return {
        "markov_u_x_y": check_markov(j4.marginal((1, 0, 2))),
        "markov_u_v_y": check_markov(j4.marginal((1, 3, 2))),
        "markov_x_u_v": check_markov(j4.marginal((0, 1, 3))),
        "markov_x_y_v": check_markov(j4.marginal((0, 2, 3))),
        "rate_loss_decomposition": abs(i_uy - (i_xy - i_xy_given_u)),
        "mutual_info_balance": abs(i_uy - (h_v + h_v_uy - h1 - h2)),
        "entropy_v_given_x": abs(conditional_entropy(j4, (3,), (0,)) - hq),
        "entropy_u_given_xv": abs(conditional_entropy(j4, (1,), (0, 3)) - defect),
        "entropy_y_given_xv": abs(conditional_entropy(j4, (2,), (0, 3)) - defect),
        "entropy_v_given_uy": abs(conditional_entropy(j4, (3,), (1, 2)) - defect),
    }


def corrupted_joint_violation(p1: float, p2: float, bump: float = 1e-3) -> float:
    """Markov deviation after injecting mass into one cell of p(u, v, y).

    Negative control: the uncorrupted joint satisfies the middle-variable
    chain exactly, so a detectable violation confirms the check has teeth.
    """
    j = build_joint_xuyv(Pmf.uniform(2), p1, p2).marginal((1, 3, 2))
    t = np.array(j.table)
    t[0, 0, 0] += bump
    return check_markov(JointPmf(t / t.sum()))


def sampled_pair_tv(p1: float, p2: float, samples: int, seed: int) -> float:
    """TV distance between sampled two-letter (u, y) pairs and the product law.

    Draws `samples` independent two-symbol codewords through the full
    pipeline (input, perturbation, channel) and compares the empirical
    joint of ((u1, y1), (u2, y2)) against the tensor square of the exact
    single-letter joint.
    """
    if samples < 1:
        raise DomainError("samples must be at least 1")
    px = Pmf.uniform(2)
    pyx = bsc(p1)
    pux = bsc(p2)
    x = sample_pmf(stream(derive_seed(seed, 0, TAG_CODEBOOK)), px.probs, (samples, 2))
    u = sample_rows(stream(derive_seed(seed, 0, TAG_PERTURB)), pux.matrix, x)
    y = sample_rows(stream(derive_seed(seed, 0, TAG_CHANNEL)), pyx.matrix, x)

    single = build_joint_uy(px, pyx, pux).table
    nu, ny = single.shape
    product = np.einsum("ab,cd->abcd", single, single).ravel()
    idx = ((u[:, 0] * ny + y[:, 0]) * nu + u[:, 1]) * ny + y[:, 1]
    emp = np.bincount(idx, minlength=nu * ny * nu * ny) / samples
    return float(0.5 * np.abs(emp - product).sum())


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa = a.std()
    sb = b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def codebook_iid_zscores(
    p2: float, M: int, n: int, seed: int
) -> tuple[float, float]:
    """(frequency z, adjacency correlation z) for one generated codebook.

    The symbol-frequency z-score is the worst deviation of empirical cu
    frequencies from p(u) in binomial sigmas; the correlation z-score is
    the worst |Pearson r| * sqrt(pairs) over horizontally and vertically
    adjacent cell pairs, which is a standard normal under independence.
    """
    px = Pmf.uniform(2)
    pux = bsc(p2)
    pair = generate_codebooks(M, n, px, pux, derive_seed(seed, 1))
    pu = px.probs @ pux.matrix
    total = M * n
    freq = np.bincount(pair.cu.ravel(), minlength=pu.size) / total

    z_freq = 0.0
    for k in range(pu.size):
        sigma = math.sqrt(pu[k] * (1.0 - pu[k]) / total)
        if sigma == 0.0:
            if freq[k] != pu[k]:
                z_freq = math.inf
        else:
            z_freq = max(z_freq, float(abs(freq[k] - pu[k])) / sigma)

    cu = pair.cu.astype(float)
    z_corr = 0.0
    for a, b in ((cu[:, :-1], cu[:, 1:]), (cu[:-1, :], cu[1:, :])):
        r = _pearson(a.ravel(), b.ravel())
        z_corr = max(z_corr, abs(r) * math.sqrt(a.size))
    return z_freq, z_corr


def run_verification(
    grid_step: float = DEFAULT_GRID_STEP,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> VerificationReport:
    """Run every check; a raising check is recorded as failed, not skipped."""
    grid = default_grid(grid_step)
    if samples < 1:
        raise DomainError("samples must be at least 1")

    checks: list[CheckResult] = []
    try:
        worst = dict.fromkeys(IDENTITY_CHECKS, 0.0)
        for p1 in grid:
            for p2 in grid:
                for name, residual in identity_residuals(p1, p2).items():
                    worst[name] = max(worst[name], residual)
        for name in IDENTITY_CHECKS:
            checks.append(
                CheckResult(name, worst[name], IDENTITY_THRESHOLD,
                            worst[name] < IDENTITY_THRESHOLD)
            )
    except Exception:
        for name in IDENTITY_CHECKS:
            checks.append(CheckResult(name, math.inf, IDENTITY_THRESHOLD, False))

    s1, s2 = SAMPLING_POINT
    try:
        violation = corrupted_joint_violation(s1, s2)
        checks.append(
            CheckResult("corrupted_joint_control", violation, CONTROL_THRESHOLD,
                        violation > CONTROL_THRESHOLD)
        )
    except Exception:
        checks.append(
            CheckResult("corrupted_joint_control", 0.0, CONTROL_THRESHOLD, False)
        )

    try:
        tv = sampled_pair_tv(s1, s2, samples, seed)
        checks.append(
            CheckResult("pairwise_factorization_tv", tv, TV_THRESHOLD,
                        tv < TV_THRESHOLD)
        )
    except Exception:
        checks.append(
            CheckResult("pairwise_factorization_tv", math.inf, TV_THRESHOLD, False)
        )

    try:
        m, n = FREQ_CODEBOOK_SHAPE
        z_freq, z_corr = codebook_iid_zscores(s2, m, n, seed)
        checks.append(
            CheckResult("codebook_symbol_frequency", z_freq, Z_LIMIT, z_freq <= Z_LIMIT)
        )
        checks.append(
            CheckResult("codebook_cell_correlation", z_corr, Z_LIMIT, z_corr <= Z_LIMIT)
        )
    except Exception:
        checks.append(CheckResult("codebook_symbol_frequency", math.inf, Z_LIMIT, False))
        checks.append(CheckResult("codebook_cell_correlation", math.inf, Z_LIMIT, False))

    config = {
        "grid_step": float(grid_step),
        "grid": [float(g) for g in grid],
        "samples": int(samples),
        "seed": int(seed),
        "sampling_point": [s1, s2],
        "identity_threshold": IDENTITY_THRESHOLD,
        "tv_threshold": TV_THRESHOLD,
        "z_limit": Z_LIMIT,
        "control_threshold": CONTROL_THRESHOLD,
    }
    return VerificationReport(tuple(checks), config)
