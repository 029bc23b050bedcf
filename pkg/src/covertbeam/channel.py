"""Scenario construction: parameters, Rayleigh channels, CSI-error ellipsoid, cover beam.

Conventions
-----------
* All powers and noise variances are linear (watts); :func:`to_db` /
  :func:`to_linear` are the only dB conversions in the package.
* Channel entries are i.i.d. circularly-symmetric complex Gaussian with the
  per-entry variances sigma1 (Bob), sigma2 (Willie), sigma3 (Carol) squared.
* A :class:`ChannelSet` always satisfies h_w = h_w_hat + dh_w exactly; the
  perfect-knowledge case is dh_w = 0.

Scenario files are flat ``key = value`` text (``#`` comments); see
:func:`load_scenario` for the schema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import cxmat
from .exceptions import InvalidInputError

__all__ = [
    "ScenarioParams",
    "ChannelSet",
    "CsiErrorEllipsoid",
    "CoverBeam",
    "to_db",
    "to_linear",
    "sample_channels",
    "sample_error",
    "apply_error",
    "make_cover_beam",
    "load_scenario",
    "save_scenario",
]


def to_db(x: float) -> float:
    """Linear power to dB (10 log10 x)."""
    if x <= 0:
        raise InvalidInputError("dB conversion requires a positive value")
    return 10.0 * math.log10(x)


def to_linear(x_db: float) -> float:
    """dB to linear power."""
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class ScenarioParams:
    """Static scenario description.

    ``n`` transmit antennas; noise variances sigma_b2/sigma_c2/sigma_w2 (W);
    channel standard deviations sigma1/sigma2/sigma3 for Bob/Willie/Carol;
    total power budget ``p_total`` (W); cover-beam power ``p_c0`` (W);
    covertness level ``epsilon`` in [0, 1].
    """

    n: int
    sigma_b2: float = 1.0
    sigma_c2: float = 1.0
    sigma_w2: float = 1.0
    sigma1: float = 1.0
    sigma2: float = 1.0
    sigma3: float = 1.0
    p_total: float = 10.0
    p_c0: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError("antenna count n must be a positive integer")
        for name in ("sigma_b2", "sigma_c2", "sigma_w2", "sigma1", "sigma2", "sigma3", "p_total", "p_c0"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.p_c0 > self.p_total:
            raise InvalidInputError("cover power p_c0 cannot exceed p_total")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidInputError("epsilon must lie in [0, 1]")

    def require_zf_capable(self) -> None:
        """Zero-forcing needs at least three antennas (null two channels, serve one)."""
        if self.n < 3:
            raise InvalidInputError("zero-forcing design requires n >= 3 antennas")


@dataclass(frozen=True)
class ChannelSet:
    """One channel draw: true channels plus the estimate/error split for Willie."""

    h_b: np.ndarray
    h_c: np.ndarray
    h_w: np.ndarray
    h_w_hat: np.ndarray
    dh_w: np.ndarray

    def __post_init__(self):
        resid = np.max(np.abs(self.h_w - (self.h_w_hat + self.dh_w)))
        if resid > 1e-12 * max(1.0, float(np.max(np.abs(self.h_w)))):
            raise InvalidInputError("ChannelSet requires h_w = h_w_hat + dh_w")

    @property
    def n(self) -> int:
        return self.h_b.size


@dataclass(frozen=True)
class CsiErrorEllipsoid:
    """Error support {dh : dh^H C_w dh <= v_w} with C_w positive definite."""

    c_w: np.ndarray
    v_w: float

    def __post_init__(self):
        c = cxmat.require_hermitian(self.c_w, "c_w")
        if self.v_w <= 0:
            raise InvalidInputError("ellipsoid volume parameter v_w must be positive")
        if float(np.linalg.eigvalsh(c).min()) <= 0:
            raise InvalidInputError("c_w must be positive definite")
        object.__setattr__(self, "c_w", c)

    @property
    def n(self) -> int:
        return self.c_w.shape[0]

    def contains(self, dh: np.ndarray, rtol: float = 1e-9) -> bool:
        q = float(np.real(np.vdot(dh, self.c_w @ dh)))
        return q <= self.v_w * (1.0 + rtol)


@dataclass(frozen=True)
class CoverBeam:
    """Cover beamformer with its design-time constants tau1 = |h_c^H w_c0|^2
    and tau2 = |h_w_hat^H w_c0|^2."""

    w_c0: np.ndarray
    tau1: float
    tau2: float


def _crandn(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian vector (unit per-entry variance)."""
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)


def sample_channels(params: ScenarioParams, seed: int) -> ChannelSet:
    """Draw one Rayleigh flat-fading channel set, deterministic under ``seed``.

    Entries of h_b, h_w, h_c are i.i.d. CN(0, sigma1^2), CN(0, sigma2^2),
    CN(0, sigma3^2).  The error split defaults to the perfect-knowledge case
    (h_w_hat = h_w, dh_w = 0); use :func:`apply_error` to install a CSI error.
    """
    rng = np.random.default_rng(seed)
    h_b = params.sigma1 * _crandn(rng, params.n)
    h_w = params.sigma2 * _crandn(rng, params.n)
    h_c = params.sigma3 * _crandn(rng, params.n)
    zero = np.zeros(params.n, dtype=complex)
    return ChannelSet(h_b=h_b, h_c=h_c, h_w=h_w, h_w_hat=h_w.copy(), dh_w=zero)


def sample_error(ell: CsiErrorEllipsoid, seed: int) -> np.ndarray:
    """Draw dh_w uniformly on the solid ellipsoid {dh : dh^H C_w dh <= v_w}.

    Sampling is uniform in the transformed unit ball: with C_w = L L^H,
    u = radius * direction uniform in the complex n-ball and
    dh = sqrt(v_w) L^-H u, so membership holds by construction.  Draws with
    the same seed but scaled v_w are nested (the underlying ball draw is
    identical), which the sweep harness uses for nested-ellipsoid sweeps.
    """
    rng = np.random.default_rng(seed)
    n = ell.n
    direction = _crandn(rng, n)
    nrm = np.linalg.norm(direction)
    if nrm == 0.0:  # pragma: no cover - probability zero
        direction = np.ones(n, dtype=complex)
        nrm = np.linalg.norm(direction)
    direction = direction / nrm
    # Uniform radius in a 2n-real-dimensional ball.
    radius = rng.random() ** (1.0 / (2 * n))
    u = radius * direction
    chol = np.linalg.cholesky(ell.c_w)
    dh = math.sqrt(ell.v_w) * np.linalg.solve(chol.conj().T, u)
    return dh


def apply_error(ch: ChannelSet, dh_w: np.ndarray) -> ChannelSet:
    """Install a CSI error: the drawn h_w becomes the estimate and the true
    channel is h_w_hat + dh_w."""
    dh = np.asarray(dh_w, dtype=complex).ravel()
    if dh.size != ch.n:
        raise InvalidInputError("dh_w dimension mismatch")
    return replace(ch, h_w_hat=ch.h_w_hat, h_w=ch.h_w_hat + dh, dh_w=dh)


def make_cover_beam(params: ScenarioParams, ch: ChannelSet) -> CoverBeam:
    """Maximum-ratio cover beam toward Carol with power p_c0.

    tau1 is computed against the true h_c (known to the designer) and tau2
    against the estimate h_w_hat, which equals the true channel in the
    perfect-knowledge case.
    """
    nrm = np.linalg.norm(ch.h_c)
    if nrm < 1e-300:
        raise InvalidInputError("cover beam undefined for zero h_c")
    w_c0 = math.sqrt(params.p_c0) * ch.h_c / nrm
    tau1 = float(np.abs(np.vdot(ch.h_c, w_c0)) ** 2)
    tau2 = float(np.abs(np.vdot(ch.h_w_hat, w_c0)) ** 2)
    return CoverBeam(w_c0=w_c0, tau1=tau1, tau2=tau2)


# ---------------------------------------------------------------------------
# Scenario files: flat "key = value" text.
# ---------------------------------------------------------------------------

_SCENARIO_FLOAT_KEYS = (
    "sigma_b2", "sigma_c2", "sigma_w2", "sigma1", "sigma2", "sigma3",
    "p_total", "p_c0", "epsilon",
)


def save_scenario(path, params: ScenarioParams, seed: int | None = None,
                  v_w: float | None = None, c_w_diag: np.ndarray | None = None) -> None:
    """Write a scenario config; see :func:`load_scenario` for the schema."""
    lines = [f"n = {params.n}"]
    lines += [f"{k} = {getattr(params, k)!r}" for k in _SCENARIO_FLOAT_KEYS]
    if seed is not None:
        lines.append(f"seed = {seed}")
    if v_w is not None:
        lines.append(f"v_w = {v_w!r}")
    if c_w_diag is not None:
        lines.append("c_w_diag = " + ", ".join(repr(float(x)) for x in c_w_diag))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_scenario(path) -> dict:
    """Parse a scenario file into {"params": ScenarioParams, "seed": int|None,
    "ellipsoid": CsiErrorEllipsoid|None}.

    Schema (one ``key = value`` per line, ``#`` starts a comment):

    ===========  ====================================================
    n            antenna count (int, required)
    sigma_b2 ... noise variances and channel sigmas (floats, optional)
    p_total      power budget in watts (optional, default 10)
    p_c0         cover power in watts (optional, default 1)
    epsilon      covertness level (optional, default 0.1)
    seed         channel seed (int, optional)
    v_w          CSI-error ellipsoid volume (float, optional)
    c_w_diag     comma-separated diagonal of C_w (defaults to identity)
    ===========  ====================================================
    """
    raw: dict[str, str] = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            raw[key] = val

    if "n" not in raw:
        raise InvalidInputError(f"{path}: missing required key 'n'")
    try:
        kwargs = {"n": int(raw.pop("n"))}
        seed = int(raw.pop("seed")) if "seed" in raw else None
        v_w = float(raw.pop("v_w")) if "v_w" in raw else None
        c_w_diag = None
        if "c_w_diag" in raw:
            c_w_diag = np.array([float(x) for x in raw.pop("c_w_diag").split(",")])
        for key in list(raw):
            if key in _SCENARIO_FLOAT_KEYS:
                kwargs[key] = float(raw.pop(key))
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    if raw:
        raise InvalidInputError(f"{path}: unknown keys {sorted(raw)}")

    params = ScenarioParams(**kwargs)
    ellipsoid = None
    if v_w is not None:
        diag = np.ones(params.n) if c_w_diag is None else c_w_diag
        if diag.size != params.n:
            raise InvalidInputError(f"{path}: c_w_diag must have n entries")
        ellipsoid = CsiErrorEllipsoid(c_w=np.diag(diag).astype(complex), v_w=v_w)
    return {"params": params, "seed": seed, "ellipsoid": ellipsoid}
